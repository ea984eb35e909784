#ifndef SIMSKIP_EMBEDDING_STORE_HPP_
#define SIMSKIP_EMBEDDING_STORE_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "simskip/common.hpp"

namespace simskip {

using Label = std::uint32_t;

/**
 * A count x dim matrix of embeddings with optional integer class labels.
 *
 * Construction validates the invariants: dim >= 1, all entries finite and,
 * when labels are present, exactly one label per row.
 */
class EmbeddingDataset {
 public:
  EmbeddingDataset() = default;
  explicit EmbeddingDataset(Matrix vectors, std::optional<std::vector<Label>> labels = std::nullopt);

  std::size_t count() const { return static_cast<std::size_t>(vectors_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(vectors_.cols()); }
  const Matrix& vectors() const { return vectors_; }
  bool has_labels() const { return labels_.has_value(); }
  const std::optional<std::vector<Label>>& labels() const { return labels_; }

  /// Labels, or ValidationError when the dataset is unlabeled.
  const std::vector<Label>& require_labels() const;

  /// Rows selected by index, in the given order.
  EmbeddingDataset select(std::span<const std::size_t> rows) const;

  /// Number of distinct classes (max label + 1); 0 if unlabeled or empty.
  std::size_t num_classes() const;

  friend bool operator==(const EmbeddingDataset& a, const EmbeddingDataset& b);

 private:
  Matrix vectors_{0, 1};
  std::optional<std::vector<Label>> labels_;
};

inline constexpr char kEmbfMagic[4] = {'E', 'M', 'B', 'F'};
inline constexpr std::uint8_t kEmbfVersion = 1;
inline constexpr std::size_t kEmbfHeaderBytes = 16;

struct DatasetHeader {
  std::uint8_t version = kEmbfVersion;
  std::uint32_t count = 0;
  std::uint32_t dim = 0;
  bool has_labels = false;
};

/// Reads only the 16-byte EMBF header.
DatasetHeader read_embf_header(const std::filesystem::path& path);

EmbeddingDataset load_embeddings(const std::filesystem::path& path);
void save_embeddings(const EmbeddingDataset& dataset, const std::filesystem::path& path);

/// CSV rows of `dim` numbers, optionally followed by an integer label column.
/// With `labeled` unset the last column is treated as a label when every
/// value in it is a nonnegative integer literal and there are >= 2 columns.
EmbeddingDataset load_csv(const std::filesystem::path& path, std::optional<bool> labeled = std::nullopt);
void save_csv(const EmbeddingDataset& dataset, const std::filesystem::path& path);

/// Values as they would read back from EMBF storage (rounded to float).
EmbeddingDataset quantize_to_storage(const EmbeddingDataset& dataset);

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Seeded random partition of row indices. Train size is floor(fraction * count).
/// With `stratify` each class contributes proportionally (largest remainder).
SplitIndices split_indices(const EmbeddingDataset& dataset, double train_fraction, std::uint64_t seed,
                           bool stratify = false);

std::pair<EmbeddingDataset, EmbeddingDataset> split(const EmbeddingDataset& dataset, double train_fraction,
                                                    std::uint64_t seed, bool stratify = false);

/// FNV-1a over dimensions, float-rounded values and labels.
std::uint64_t fingerprint(const EmbeddingDataset& dataset);

}  // namespace simskip

#endif  // SIMSKIP_EMBEDDING_STORE_HPP_
