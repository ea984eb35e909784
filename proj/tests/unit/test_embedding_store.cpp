#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>

#include "matrix_helpers.hpp"
#include "simskip/embedding_store.hpp"

namespace simskip {
namespace {

using testing::random_matrix;
using testing::scratch_dir;

std::vector<unsigned char> file_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& p, const std::vector<unsigned char>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

TEST(EmbeddingDataset, RejectsNonFiniteValues) {
  Matrix m(2, 2);
  m << 1, 2, std::nan(""), 4;
  EXPECT_THROW(EmbeddingDataset{m}, ValidationError);
}

TEST(EmbeddingDataset, RejectsLabelCountMismatch) {
  EXPECT_THROW(EmbeddingDataset(Matrix::Zero(3, 2), std::vector<Label>{0, 1}), ValidationError);
}

TEST(Embf, SmallDatasetHasExactLayout) {
  auto dir = scratch_dir("embf_layout");
  Matrix m(2, 3);
  m << 1, 2, 3, 4, 5, 6;
  const EmbeddingDataset d(m);
  save_embeddings(d, dir / "d.embf");
  const auto bytes = file_bytes(dir / "d.embf");
  ASSERT_EQ(bytes.size(), 16u + 24u);
  const std::vector<unsigned char> header = {'E', 'M', 'B', 'F', 1, 0, 0, 0, 2, 0, 0, 0, 3, 0, 0, 0};
  EXPECT_TRUE(std::equal(header.begin(), header.end(), bytes.begin()));
  // 1.0f little-endian is 00 00 80 3f
  EXPECT_EQ(bytes[16], 0x00);
  EXPECT_EQ(bytes[18], 0x80);
  EXPECT_EQ(bytes[19], 0x3f);
  EXPECT_EQ(load_embeddings(dir / "d.embf"), d);
}

TEST(Embf, LabelsRoundTrip) {
  auto dir = scratch_dir("embf_labels");
  const EmbeddingDataset d(random_matrix(2, 4, 3), std::vector<Label>{0, 1});
  save_embeddings(d, dir / "d.embf");
  const auto back = load_embeddings(dir / "d.embf");
  ASSERT_TRUE(back.has_labels());
  EXPECT_EQ(*back.labels(), (std::vector<Label>{0, 1}));
  EXPECT_EQ(file_bytes(dir / "d.embf")[5], 1);
  EXPECT_EQ(file_bytes(dir / "d.embf").size(), 16u + 2 * 4 * 4 + 2 * 4);
}

TEST(Embf, EmptyDataset) {
  auto dir = scratch_dir("embf_empty");
  const EmbeddingDataset d(Matrix(0, 5));
  save_embeddings(d, dir / "e.embf");
  EXPECT_EQ(file_bytes(dir / "e.embf").size(), 16u);
  const auto back = load_embeddings(dir / "e.embf");
  EXPECT_EQ(back.count(), 0u);
  EXPECT_EQ(back.dim(), 5u);
}

TEST(Embf, RoundTripEqualsStoragePrecisionProperty) {
  auto dir = scratch_dir("embf_property");
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    const auto rows = std::uniform_int_distribution<int>(0, 30)(rng);
    const auto cols = std::uniform_int_distribution<int>(1, 12)(rng);
    std::optional<std::vector<Label>> labels;
    if (seed % 2 == 0) {
      labels.emplace(static_cast<std::size_t>(rows));
      for (auto& l : *labels) l = static_cast<Label>(rng() % 7);
    }
    const EmbeddingDataset d(random_matrix(rows, cols, seed, 100.0), labels);
    save_embeddings(d, dir / "p.embf");
    const auto back = load_embeddings(dir / "p.embf");
    EXPECT_EQ(back, quantize_to_storage(d)) << "seed " << seed;
    // A second cycle is the exact identity.
    save_embeddings(back, dir / "q.embf");
    EXPECT_EQ(file_bytes(dir / "p.embf"), file_bytes(dir / "q.embf"));
  }
}

TEST(Embf, BadMagicIsFormatError) {
  auto dir = scratch_dir("embf_magic");
  save_embeddings(EmbeddingDataset(random_matrix(2, 2, 1)), dir / "d.embf");
  auto bytes = file_bytes(dir / "d.embf");
  bytes[0] = 'X';
  write_bytes(dir / "d.embf", bytes);
  EXPECT_THROW(load_embeddings(dir / "d.embf"), FormatError);
}

TEST(Embf, MissingRowIsFormatError) {
  auto dir = scratch_dir("embf_short");
  save_embeddings(EmbeddingDataset(random_matrix(3, 4, 1)), dir / "d.embf");
  auto bytes = file_bytes(dir / "d.embf");
  bytes.resize(bytes.size() - 4 * 4);
  write_bytes(dir / "d.embf", bytes);
  EXPECT_THROW(load_embeddings(dir / "d.embf"), FormatError);
}

TEST(Embf, TrailingGarbageIsFormatError) {
  auto dir = scratch_dir("embf_long");
  save_embeddings(EmbeddingDataset(random_matrix(3, 4, 1)), dir / "d.embf");
  auto bytes = file_bytes(dir / "d.embf");
  bytes.push_back(0);
  write_bytes(dir / "d.embf", bytes);
  EXPECT_THROW(load_embeddings(dir / "d.embf"), FormatError);
}

TEST(Embf, NanPayloadIsValidationError) {
  auto dir = scratch_dir("embf_nan");
  save_embeddings(EmbeddingDataset(random_matrix(1, 2, 1)), dir / "d.embf");
  auto bytes = file_bytes(dir / "d.embf");
  // quiet NaN 0x7fc00000
  bytes[16] = 0x00;
  bytes[17] = 0x00;
  bytes[18] = 0xc0;
  bytes[19] = 0x7f;
  write_bytes(dir / "d.embf", bytes);
  EXPECT_THROW(load_embeddings(dir / "d.embf"), ValidationError);
}

TEST(Embf, UnwritablePathIsIoError) {
  EXPECT_THROW(save_embeddings(EmbeddingDataset(random_matrix(1, 2, 1)), "/nonexistent_dir/x.embf"), IoError);
  EXPECT_THROW(load_embeddings("/nonexistent_dir/x.embf"), IoError);
}

TEST(Csv, LabeledAndUnlabeled) {
  auto dir = scratch_dir("csv");
  {
    std::ofstream out(dir / "a.csv");
    out << "0.5, 1.5, 0\n-2,3e-1,1\n";
  }
  const auto a = load_csv(dir / "a.csv");
  ASSERT_TRUE(a.has_labels());
  EXPECT_EQ(a.dim(), 2u);
  EXPECT_DOUBLE_EQ(a.vectors()(1, 1), 0.3);
  EXPECT_EQ(*a.labels(), (std::vector<Label>{0, 1}));

  const auto unlabeled = load_csv(dir / "a.csv", false);
  EXPECT_FALSE(unlabeled.has_labels());
  EXPECT_EQ(unlabeled.dim(), 3u);

  const EmbeddingDataset d(random_matrix(4, 3, 9), std::vector<Label>{2, 0, 1, 1});
  save_csv(d, dir / "b.csv");
  EXPECT_EQ(load_csv(dir / "b.csv"), d);
}

TEST(Csv, RaggedRowsAreFormatError) {
  auto dir = scratch_dir("csv_ragged");
  {
    std::ofstream out(dir / "a.csv");
    out << "1,2,3\n4,5\n";
  }
  EXPECT_THROW(load_csv(dir / "a.csv"), FormatError);
}

EmbeddingDataset labeled_range(std::size_t n, std::size_t classes) {
  Matrix m(static_cast<Eigen::Index>(n), 1);
  std::vector<Label> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    m(static_cast<Eigen::Index>(i), 0) = static_cast<double>(i);
    labels[i] = static_cast<Label>(i % classes);
  }
  return EmbeddingDataset(m, labels);
}

TEST(Split, SizesFollowFloor) {
  const auto d = labeled_range(10, 2);
  const auto [train, test] = split(d, 0.8, 7);
  EXPECT_EQ(train.count(), 8u);
  EXPECT_EQ(test.count(), 2u);
}

TEST(Split, Deterministic) {
  const auto d = labeled_range(10, 2);
  EXPECT_EQ(split(d, 0.8, 7), split(d, 0.8, 7));
  const auto a = split_indices(d, 0.8, 7);
  const auto b = split_indices(d, 0.8, 7);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.test, b.test);
}

TEST(Split, PartitionPropertyAcrossSeeds) {
  for (std::size_t n : {2u, 3u, 10u, 37u}) {
    const auto d = labeled_range(n, 3);
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
      for (bool stratify : {false, true}) {
        const auto idx = split_indices(d, 0.8, seed, stratify);
        std::vector<std::size_t> all = idx.train;
        all.insert(all.end(), idx.test.begin(), idx.test.end());
        std::sort(all.begin(), all.end());
        std::vector<std::size_t> expected(n);
        std::iota(expected.begin(), expected.end(), 0);
        EXPECT_EQ(all, expected) << "n=" << n << " seed=" << seed;
        EXPECT_EQ(idx.train.size(), static_cast<std::size_t>(0.8 * static_cast<double>(n)));
      }
    }
  }
}

TEST(Split, SeedsSevenAndEightBothPartitionTenRows) {
  const auto d = labeled_range(10, 2);
  for (std::uint64_t seed : {7u, 8u}) {
    const auto idx = split_indices(d, 0.8, seed);
    std::multiset<std::size_t> rows(idx.train.begin(), idx.train.end());
    rows.insert(idx.test.begin(), idx.test.end());
    EXPECT_EQ(rows, (std::multiset<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9}));
  }
}

TEST(Split, StratifiedKeepsClassProportions) {
  const auto d = labeled_range(100, 2);
  const auto [train, test] = split(d, 0.8, 3, true);
  const auto& labels = *test.labels();
  EXPECT_EQ(std::count(labels.begin(), labels.end(), 0u), 10);
  EXPECT_EQ(std::count(labels.begin(), labels.end(), 1u), 10);
}

TEST(Split, TooFewRowsIsValidationError) {
  EXPECT_THROW(split(labeled_range(1, 1), 0.5, 0), ValidationError);
}

}  // namespace
}  // namespace simskip
