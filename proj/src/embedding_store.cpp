#include "simskip/embedding_store.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "byte_io.hpp"

namespace simskip {

namespace detail {

std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open '" + path + "' for reading");
  }
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) {
    throw IoError("error while reading '" + path + "'");
  }
  return bytes;
}

void write_file(const std::string& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot open '" + path + "' for writing");
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw IoError("error while writing '" + path + "'");
  }
}

}  // namespace detail

EmbeddingDataset::EmbeddingDataset(Matrix vectors, std::optional<std::vector<Label>> labels)
    : vectors_(std::move(vectors)), labels_(std::move(labels)) {
  if (vectors_.cols() < 1) {
    throw ValidationError("embedding dimension must be >= 1");
  }
  if (!vectors_.allFinite()) {
    for (Eigen::Index r = 0; r < vectors_.rows(); ++r) {
      if (!vectors_.row(r).allFinite()) {
        throw ValidationError("non-finite value in embedding row " + std::to_string(r));
      }
    }
  }
  if (labels_ && labels_->size() != count()) {
    throw ValidationError("label count " + std::to_string(labels_->size()) + " does not match row count " +
                          std::to_string(count()));
  }
}

const std::vector<Label>& EmbeddingDataset::require_labels() const {
  if (!labels_) {
    throw ValidationError("dataset has no labels");
  }
  return *labels_;
}

EmbeddingDataset EmbeddingDataset::select(std::span<const std::size_t> rows) const {
  Matrix out(static_cast<Eigen::Index>(rows.size()), vectors_.cols());
  std::optional<std::vector<Label>> lab;
  if (labels_) {
    lab.emplace();
    lab->reserve(rows.size());
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= count()) {
      throw ValidationError("row index out of range");
    }
    out.row(static_cast<Eigen::Index>(i)) = vectors_.row(static_cast<Eigen::Index>(rows[i]));
    if (labels_) {
      lab->push_back((*labels_)[rows[i]]);
    }
  }
  return EmbeddingDataset(std::move(out), std::move(lab));
}

std::size_t EmbeddingDataset::num_classes() const {
  if (!labels_ || labels_->empty()) {
    return 0;
  }
  return static_cast<std::size_t>(*std::max_element(labels_->begin(), labels_->end())) + 1;
}

bool operator==(const EmbeddingDataset& a, const EmbeddingDataset& b) {
  return a.vectors_.rows() == b.vectors_.rows() && a.vectors_.cols() == b.vectors_.cols() &&
         a.vectors_ == b.vectors_ && a.labels_ == b.labels_;
}

namespace {

DatasetHeader parse_header(detail::ByteReader& reader, const std::string& path) {
  if (reader.remaining() < kEmbfHeaderBytes) {
    throw FormatError(path + ": file shorter than EMBF header");
  }
  char magic[4];
  for (char& c : magic) {
    c = static_cast<char>(reader.get_le<std::uint8_t>());
  }
  if (!std::equal(std::begin(magic), std::end(magic), std::begin(kEmbfMagic))) {
    throw FormatError(path + ": bad magic, not an EMBF file");
  }
  DatasetHeader h;
  h.version = reader.get_le<std::uint8_t>();
  if (h.version != kEmbfVersion) {
    throw FormatError(path + ": unsupported EMBF version " + std::to_string(h.version));
  }
  const auto flag = reader.get_le<std::uint8_t>();
  if (flag > 1) {
    throw FormatError(path + ": invalid has_labels flag");
  }
  h.has_labels = flag == 1;
  reader.get_le<std::uint16_t>();  // reserved
  h.count = reader.get_le<std::uint32_t>();
  h.dim = reader.get_le<std::uint32_t>();
  if (h.dim == 0) {
    throw FormatError(path + ": dim must be >= 1");
  }
  return h;
}

}  // namespace

DatasetHeader read_embf_header(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path.string());
  detail::ByteReader reader(bytes, path.string());
  return parse_header(reader, path.string());
}

EmbeddingDataset load_embeddings(const std::filesystem::path& path) {
  const std::string name = path.string();
  const auto bytes = detail::read_file(name);
  detail::ByteReader reader(bytes, name);
  const DatasetHeader h = parse_header(reader, name);

  const std::uint64_t values = static_cast<std::uint64_t>(h.count) * h.dim;
  const std::uint64_t expected = values * 4 + (h.has_labels ? std::uint64_t{h.count} * 4 : 0);
  if (reader.remaining() != expected) {
    throw FormatError(name + ": payload is " + std::to_string(reader.remaining()) + " bytes, header implies " +
                      std::to_string(expected));
  }

  Matrix vectors(h.count, h.dim);
  for (std::uint32_t r = 0; r < h.count; ++r) {
    for (std::uint32_t c = 0; c < h.dim; ++c) {
      const float v = reader.get_f32();
      if (!std::isfinite(v)) {
        throw ValidationError(name + ": non-finite value at row " + std::to_string(r) + ", column " +
                              std::to_string(c));
      }
      vectors(r, c) = static_cast<double>(v);
    }
  }
  std::optional<std::vector<Label>> labels;
  if (h.has_labels) {
    labels.emplace(h.count);
    for (auto& l : *labels) {
      l = reader.get_le<std::uint32_t>();
    }
  }
  return EmbeddingDataset(std::move(vectors), std::move(labels));
}

void save_embeddings(const EmbeddingDataset& dataset, const std::filesystem::path& path) {
  if (dataset.count() > std::numeric_limits<std::uint32_t>::max() ||
      dataset.dim() > std::numeric_limits<std::uint32_t>::max()) {
    throw ValidationError("dataset too large for EMBF");
  }
  std::vector<unsigned char> out;
  out.reserve(kEmbfHeaderBytes + dataset.count() * (dataset.dim() + 1) * 4);
  out.insert(out.end(), std::begin(kEmbfMagic), std::end(kEmbfMagic));
  out.push_back(kEmbfVersion);
  out.push_back(dataset.has_labels() ? 1 : 0);
  out.push_back(0);
  out.push_back(0);
  detail::put_le(out, static_cast<std::uint32_t>(dataset.count()));
  detail::put_le(out, static_cast<std::uint32_t>(dataset.dim()));
  const Matrix& m = dataset.vectors();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const float v = static_cast<float>(m(r, c));
      if (!std::isfinite(v)) {
        throw ValidationError("value at row " + std::to_string(r) + " overflows 32-bit storage");
      }
      detail::put_f32(out, v);
    }
  }
  if (dataset.has_labels()) {
    for (Label l : *dataset.labels()) {
      detail::put_le(out, l);
    }
  }
  detail::write_file(path.string(), out);
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    fields.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
  }
  return fields;
}

bool is_label_literal(const std::string& s) {
  return !s.empty() && s.size() <= 10 && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

double parse_double(const std::string& s, const std::string& where) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw FormatError(where + ": not a number: '" + s + "'");
  }
  return v;
}

}  // namespace

EmbeddingDataset load_csv(const std::filesystem::path& path, std::optional<bool> labeled) {
  const std::string name = path.string();
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open '" + name + "' for reading");
  }
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    rows.push_back(split_fields(line));
    if (rows.back().size() != rows.front().size()) {
      throw FormatError(name + ": row " + std::to_string(rows.size()) + " has " + std::to_string(rows.back().size()) +
                        " columns, expected " + std::to_string(rows.front().size()));
    }
  }
  if (rows.empty()) {
    throw FormatError(name + ": empty CSV");
  }
  const std::size_t cols = rows.front().size();
  bool has_labels = false;
  if (labeled) {
    has_labels = *labeled;
  } else if (cols >= 2) {
    has_labels = std::all_of(rows.begin(), rows.end(), [](const auto& r) { return is_label_literal(r.back()); });
  }
  const std::size_t dim = has_labels ? cols - 1 : cols;
  if (dim < 1) {
    throw FormatError(name + ": no embedding columns");
  }
  Matrix vectors(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim));
  std::optional<std::vector<Label>> labels;
  if (has_labels) {
    labels.emplace();
  }
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::string where = name + ":" + std::to_string(r + 1);
    for (std::size_t c = 0; c < dim; ++c) {
      vectors(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = parse_double(rows[r][c], where);
    }
    if (has_labels) {
      if (!is_label_literal(rows[r].back())) {
        throw FormatError(where + ": label must be a nonnegative integer");
      }
      labels->push_back(static_cast<Label>(std::stoul(rows[r].back())));
    }
  }
  return EmbeddingDataset(std::move(vectors), std::move(labels));
}

void save_csv(const EmbeddingDataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw IoError("cannot open '" + path.string() + "' for writing");
  }
  out << std::setprecision(17);
  const Matrix& m = dataset.vectors();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c > 0) {
        out << ',';
      }
      out << m(r, c);
    }
    if (dataset.has_labels()) {
      out << ',' << (*dataset.labels())[static_cast<std::size_t>(r)];
    }
    out << '\n';
  }
  if (!out) {
    throw IoError("error while writing '" + path.string() + "'");
  }
}

EmbeddingDataset quantize_to_storage(const EmbeddingDataset& dataset) {
  Matrix q = dataset.vectors().unaryExpr([](double v) { return static_cast<double>(static_cast<float>(v)); });
  return EmbeddingDataset(std::move(q), dataset.labels());
}

SplitIndices split_indices(const EmbeddingDataset& dataset, double train_fraction, std::uint64_t seed,
                           bool stratify) {
  const std::size_t n = dataset.count();
  if (n < 2) {
    throw ValidationError("split needs at least 2 rows, got " + std::to_string(n));
  }
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ValidationError("train_fraction must lie in (0, 1)");
  }
  const auto train_total = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n)));
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  SplitIndices out;
  if (!stratify) {
    out.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(train_total));
    out.test.assign(order.begin() + static_cast<std::ptrdiff_t>(train_total), order.end());
    return out;
  }

  const auto& labels = dataset.require_labels();
  const std::size_t classes = dataset.num_classes();
  std::vector<std::vector<std::size_t>> members(classes);
  for (std::size_t idx : order) {
    members[labels[idx]].push_back(idx);
  }
  // Largest-remainder allocation so the class quotas sum to train_total.
  std::vector<std::size_t> quota(classes);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    const double exact = train_fraction * static_cast<double>(members[c].size());
    quota[c] = static_cast<std::size_t>(std::floor(exact));
    assigned += quota[c];
    remainders.emplace_back(exact - std::floor(exact), c);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < train_total && i < remainders.size(); ++i) {
    const std::size_t c = remainders[i].second;
    if (quota[c] < members[c].size()) {
      ++quota[c];
      ++assigned;
    }
  }
  std::vector<char> in_train(n, 0);
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i < quota[c]; ++i) {
      in_train[members[c][i]] = 1;
    }
  }
  for (std::size_t idx : order) {
    (in_train[idx] ? out.train : out.test).push_back(idx);
  }
  return out;
}

std::pair<EmbeddingDataset, EmbeddingDataset> split(const EmbeddingDataset& dataset, double train_fraction,
                                                    std::uint64_t seed, bool stratify) {
  const SplitIndices idx = split_indices(dataset, train_fraction, seed, stratify);
  return {dataset.select(idx.train), dataset.select(idx.test)};
}

std::uint64_t fingerprint(const EmbeddingDataset& dataset) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) {
      h ^= (v >> (8 * i)) & 0xFFu;
      h *= 0x100000001b3ULL;
    }
  };
  mix(dataset.count(), 8);
  mix(dataset.dim(), 8);
  const Matrix& m = dataset.vectors();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      mix(std::bit_cast<std::uint32_t>(static_cast<float>(m(r, c))), 4);
    }
  }
  if (dataset.has_labels()) {
    for (Label l : *dataset.labels()) {
      mix(l, 4);
    }
  }
  return h;
}

}  // namespace simskip
