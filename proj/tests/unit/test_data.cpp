#include <gtest/gtest.h>
#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <cstdlib>
#include <fstream>
#include <set>

#include "leap/data.hpp"
#include "leap/error.hpp"

using namespace leap;
namespace fs = std::filesystem;

namespace {

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

std::vector<std::uint8_t> idx_images(std::uint32_t n, std::uint32_t rows, std::uint32_t cols) {
  std::vector<std::uint8_t> out;
  put_be32(out, 0x803);
  put_be32(out, n);
  put_be32(out, rows);
  put_be32(out, cols);
  for (std::uint32_t i = 0; i < n * rows * cols; ++i) out.push_back(static_cast<std::uint8_t>((i * 37) % 256));
  return out;
}

std::vector<std::uint8_t> idx_labels(std::uint32_t n) {
  std::vector<std::uint8_t> out;
  put_be32(out, 0x801);
  put_be32(out, n);
  for (std::uint32_t i = 0; i < n; ++i) out.push_back(static_cast<std::uint8_t>(i % 10));
  return out;
}

fs::path temp_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("leap_test_data_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_plain(const fs::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream f(p, std::ios::binary);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void write_gz(const fs::path& p, const std::vector<std::uint8_t>& bytes) {
  gzFile f = gzopen(p.string().c_str(), "wb");
  ASSERT_NE(f, nullptr);
  ASSERT_EQ(gzwrite(f, bytes.data(), static_cast<unsigned>(bytes.size())), static_cast<int>(bytes.size()));
  gzclose(f);
}

}  // namespace

TEST(Idx, ParsesHandBuiltPayload) {
  const auto img = idx_images(3, 2, 2);
  const auto lbl = idx_labels(3);
  const auto ds = parse_mnist_idx(img, lbl);
  ASSERT_EQ(ds.size(), 3u);
  EXPECT_EQ(ds.dim(), 4);
  EXPECT_EQ(ds.num_classes, 10);
  for (std::uint32_t i = 0; i < 12; ++i)
    EXPECT_DOUBLE_EQ(ds.inputs(i / 4, i % 4), ((i * 37) % 256) / 255.0);
  EXPECT_EQ(ds.labels, (std::vector<int>{0, 1, 2}));
  EXPECT_EQ(ds.checksum.size(), 16u);
}

TEST(Idx, GzipAndPlainFilesAgree) {
  const auto dir = temp_dir("gz");
  const auto img = idx_images(5, 3, 3);
  const auto lbl = idx_labels(5);
  write_plain(dir / "img", img);
  write_plain(dir / "lbl", lbl);
  write_gz(dir / "img.gz", img);
  write_gz(dir / "lbl.gz", lbl);
  const auto a = load_mnist_idx((dir / "img").string(), (dir / "lbl").string());
  const auto b = load_mnist_idx((dir / "img.gz").string(), (dir / "lbl.gz").string());
  EXPECT_EQ(a.inputs, b.inputs);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.checksum, b.checksum);
  fs::remove_all(dir);
}

TEST(Idx, MissingFileIsIoError) {
  EXPECT_THROW(load_mnist_idx("/nonexistent/img", "/nonexistent/lbl"), IoError);
}

TEST(Idx, BadMagicReportsOffsetZero) {
  auto img = idx_images(2, 2, 2);
  img[2] = 0x08;
  img[3] = 0x02;
  try {
    parse_mnist_idx(img, idx_labels(2));
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 0u);
  }
}

TEST(Idx, TruncatedImages) {
  auto img = idx_images(2, 2, 2);
  img.pop_back();
  try {
    parse_mnist_idx(img, idx_labels(2));
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), img.size());
  }
  const std::vector<std::uint8_t> header_only{0, 0, 8};
  EXPECT_THROW(parse_mnist_idx(header_only, idx_labels(2)), ParseError);
}

TEST(Idx, CountMismatch) {
  try {
    parse_mnist_idx(idx_images(3, 2, 2), idx_labels(2));
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 4u);
  }
}

TEST(Idx, LabelOutOfRange) {
  auto lbl = idx_labels(2);
  lbl[9] = 12;
  try {
    parse_mnist_idx(idx_images(2, 2, 2), lbl);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 9u);
  }
}

TEST(Split, SizesDisjointAndDeterministic) {
  auto ds = synth_blobs(10, 4, 4, 3.0, 1);
  // tag each row so we can recover its original index
  for (Eigen::Index i = 0; i < ds.inputs.rows(); ++i) ds.inputs(i, 0) = static_cast<double>(i);
  const auto [tr, va] = split_train_val(ds, {25, 10, 7});
  EXPECT_EQ(tr.size(), 25u);
  EXPECT_EQ(va.size(), 10u);
  std::set<double> seen;
  for (Eigen::Index i = 0; i < tr.inputs.rows(); ++i) seen.insert(tr.inputs(i, 0));
  for (Eigen::Index i = 0; i < va.inputs.rows(); ++i) seen.insert(va.inputs(i, 0));
  EXPECT_EQ(seen.size(), 35u);
  const auto [tr2, va2] = split_train_val(ds, {25, 10, 7});
  EXPECT_EQ(tr.inputs, tr2.inputs);
  EXPECT_EQ(va.labels, va2.labels);
  const auto [tr3, va3] = split_train_val(ds, {25, 10, 8});
  EXPECT_NE(tr.inputs, tr3.inputs);
}

TEST(Split, EmptyValidationAndOversize) {
  const auto ds = synth_blobs(5, 2, 2, 3.0, 1);
  const auto [tr, va] = split_train_val(ds, {10, 0, 0});
  EXPECT_EQ(tr.size(), 10u);
  EXPECT_EQ(va.size(), 0u);
  EXPECT_THROW(split_train_val(ds, {8, 3, 0}), ConfigError);
}

TEST(Blobs, CentresAndLabels) {
  const auto ds = synth_blobs(4000, 3, 5, 6.0, 2);
  ASSERT_EQ(ds.size(), 12000u);
  for (std::size_t i = 0; i < ds.size(); ++i) ASSERT_EQ(ds.labels[i], static_cast<int>(i % 3));
  const double c = 6.0 / std::sqrt(2.0);
  for (int k = 0; k < 3; ++k) {
    Eigen::RowVectorXd m = Eigen::RowVectorXd::Zero(5);
    for (std::size_t i = k; i < ds.size(); i += 3) m += ds.inputs.row(static_cast<Eigen::Index>(i));
    m /= 4000.0;
    for (int j = 0; j < 5; ++j) EXPECT_NEAR(m(j), j == k ? c : 0.0, 4.0 / std::sqrt(4000.0));
  }
}

TEST(Blobs, LinearlySeparableAtSeparationTen) {
  // The true centres give a linear rule: class 0 iff x0 > x1.
  const auto ds = synth_blobs(500, 2, 2, 10.0, 3);
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const int pred = ds.inputs(static_cast<Eigen::Index>(i), 0) > ds.inputs(static_cast<Eigen::Index>(i), 1) ? 0 : 1;
    wrong += pred != ds.labels[i];
  }
  EXPECT_EQ(wrong, 0u);
}

TEST(Blobs, SinglePointPerClassAndErrors) {
  const auto ds = synth_blobs(1, 3, 3, 2.0, 0);
  EXPECT_EQ(ds.size(), 3u);
  EXPECT_NO_THROW(validate(ds));
  EXPECT_THROW(synth_blobs(1, 4, 3, 2.0, 0), ConfigError);
  EXPECT_THROW(synth_blobs(0, 2, 3, 2.0, 0), ConfigError);
  EXPECT_THROW(synth_blobs(1, 2, 3, 0.0, 0), ConfigError);
}

TEST(Batches, SizesAndPartition) {
  const auto b = batch_indices(10, 3, 5);
  ASSERT_EQ(b.size(), 4u);
  EXPECT_EQ(b[0].size(), 3u);
  EXPECT_EQ(b[3].size(), 1u);
  std::vector<std::size_t> all;
  for (const auto& x : b) all.insert(all.end(), x.begin(), x.end());
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(all[i], i);
  EXPECT_EQ(batch_indices(10, 3, 5), b);
  EXPECT_NE(batch_indices(10, 3, 6), b);
  EXPECT_THROW(batch_indices(10, 0, 5), ConfigError);
}

TEST(Batches, IteratorGathersRows) {
  const auto ds = synth_blobs(5, 2, 2, 3.0, 1);
  const auto idx = batch_indices(ds.size(), 4, 9);
  const auto batches = batch_iterator(ds, 4, 9);
  ASSERT_EQ(batches.size(), idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k)
    for (std::size_t j = 0; j < idx[k].size(); ++j) {
      EXPECT_EQ(batches[k].labels[j], ds.labels[idx[k][j]]);
      EXPECT_EQ(batches[k].inputs.row(static_cast<Eigen::Index>(j)), ds.inputs.row(static_cast<Eigen::Index>(idx[k][j])));
    }
}

TEST(Standardizer, ZeroMeanUnitVariance) {
  auto ds = synth_blobs(100, 2, 3, 4.0, 1);
  ds.inputs.col(2).setConstant(7.0);
  const auto st = Standardizer::fit(ds);
  st.apply(ds);
  const Eigen::RowVectorXd mean = ds.inputs.colwise().mean();
  for (int j = 0; j < 3; ++j) EXPECT_NEAR(mean(j), 0.0, 1e-12);
  for (int j = 0; j < 2; ++j) EXPECT_NEAR(ds.inputs.col(j).array().square().mean(), 1.0, 1e-12);
  EXPECT_EQ(ds.inputs.col(2).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Fnv1a, KnownVectors) {
  EXPECT_EQ(fnv1a_hex({}), "cbf29ce484222325");
  const std::vector<std::uint8_t> a{'a'};
  EXPECT_EQ(fnv1a_hex(a), "af63dc4c8601ec8c");
  const std::string fb = "foobar";
  EXPECT_EQ(fnv1a_hex({reinterpret_cast<const std::uint8_t*>(fb.data()), fb.size()}), "85944171f73967e8");
}

TEST(Validate, RejectsBadDatasets) {
  auto ds = synth_blobs(2, 2, 2, 3.0, 1);
  ds.labels[0] = 2;
  EXPECT_THROW(validate(ds), UsageError);
  ds.labels[0] = 0;
  ds.inputs(0, 0) = std::nan("");
  EXPECT_THROW(validate(ds), NumericFault);
}

TEST(Idx, PixelEndpointsRoundTrip) {
  std::vector<std::uint8_t> img;
  put_be32(img, 0x803);
  put_be32(img, 2);
  put_be32(img, 1);
  put_be32(img, 2);
  for (std::uint8_t b : {0, 255, 255, 0}) img.push_back(b);
  const auto ds = parse_mnist_idx(img, idx_labels(2));
  EXPECT_EQ(ds.inputs(0, 0), 0.0);
  EXPECT_EQ(ds.inputs(0, 1), 1.0);
  EXPECT_EQ(ds.inputs(1, 0), 1.0);
  EXPECT_EQ(ds.inputs(1, 1), 0.0);
}

TEST(Idx, ChecksumStableAcrossLoads) {
  const auto dir = temp_dir("checksum");
  write_plain(dir / "img", idx_images(4, 2, 2));
  write_plain(dir / "lbl", idx_labels(4));
  const auto a = load_mnist_idx((dir / "img").string(), (dir / "lbl").string());
  const auto b = load_mnist_idx((dir / "img").string(), (dir / "lbl").string());
  EXPECT_EQ(a.checksum, b.checksum);
  auto other = idx_images(4, 2, 2);
  other.back() ^= 1;
  EXPECT_NE(parse_mnist_idx(other, idx_labels(4)).checksum, a.checksum);
  fs::remove_all(dir);
}

TEST(Idx, OfficialMnistWhenAvailable) {
  const char* dir = std::getenv("LEAP_MNIST_DIR");
  if (dir == nullptr) GTEST_SKIP() << "LEAP_MNIST_DIR not set";
  const fs::path d(dir);
  const auto pick = [&](const std::string& base) {
    return fs::exists(d / base) ? (d / base).string() : (d / (base + ".gz")).string();
  };
  const auto ds = load_mnist_idx(pick("train-images-idx3-ubyte"), pick("train-labels-idx1-ubyte"));
  EXPECT_EQ(ds.size(), 60000u);
  EXPECT_EQ(ds.dim(), 784);
  const auto [tr, va] = split_train_val(ds, {50000, 10000, 0});
  EXPECT_EQ(tr.size(), 50000u);
  EXPECT_EQ(va.size(), 10000u);
}

TEST(Blobs, SameSeedSameData) {
  const auto a = synth_blobs(20, 3, 4, 5.0, 11);
  const auto b = synth_blobs(20, 3, 4, 5.0, 11);
  EXPECT_EQ(a.inputs, b.inputs);
  EXPECT_EQ(a.checksum, b.checksum);
  EXPECT_NE(synth_blobs(20, 3, 4, 5.0, 12).inputs, a.inputs);
}
