#include "leap/data.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "leap/error.hpp"
#include "leap/rng.hpp"

namespace leap {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::uint64_t fnv1a(std::span<const std::uint8_t> bytes, std::uint64_t h) {
  for (auto b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<std::uint8_t> read_maybe_gzip(const std::string& path) {
  // gzread passes uncompressed input through untouched, which covers both cases.
  gzFile f = gzopen(path.c_str(), "rb");
  if (!f) throw IoError("cannot open '" + path + "'");
  std::vector<std::uint8_t> out;
  std::uint8_t buf[1 << 16];
  int got = 0;
  while ((got = gzread(f, buf, sizeof buf)) > 0) out.insert(out.end(), buf, buf + got);
  int errnum = 0;
  const char* msg = gzerror(f, &errnum);
  const bool failed = got < 0 || (errnum != Z_OK && errnum != Z_BUF_ERROR);
  const std::string detail = msg ? msg : "";
  gzclose(f);
  if (failed) throw IoError("reading '" + path + "': " + detail);
  return out;
}

std::uint32_t read_be32(std::span<const std::uint8_t> buf, std::size_t offset, const char* what) {
  if (offset + 4 > buf.size()) throw ParseError(std::string("truncated ") + what, buf.size());
  return (std::uint32_t{buf[offset]} << 24) | (std::uint32_t{buf[offset + 1]} << 16) |
         (std::uint32_t{buf[offset + 2]} << 8) | std::uint32_t{buf[offset + 3]};
}

}  // namespace

std::string fnv1a_hex(std::span<const std::uint8_t> bytes, std::uint64_t basis) {
  char out[17];
  std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(fnv1a(bytes, basis)));
  return out;
}

void validate(const Dataset& ds) {
  if (ds.size() == 0) throw ConfigError("data", "dataset '" + ds.name + "' is empty");
  if (static_cast<std::size_t>(ds.inputs.rows()) != ds.size())
    throw UsageError("dataset '" + ds.name + "' has mismatched input rows and labels");
  if (!ds.inputs.allFinite()) throw NumericFault("dataset inputs", 0);
  for (std::size_t i = 0; i < ds.labels.size(); ++i)
    if (ds.labels[i] < 0 || ds.labels[i] >= ds.num_classes) throw UsageError("label out of range at row " + std::to_string(i));
}

Dataset parse_mnist_idx(std::span<const std::uint8_t> images, std::span<const std::uint8_t> labels) {
  const auto img_magic = read_be32(images, 0, "image header");
  if (img_magic != kImageMagic) throw ParseError("bad image magic (expected 0x00000803)", 0);
  const auto n = read_be32(images, 4, "image header");
  const auto rows = read_be32(images, 8, "image header");
  const auto cols = read_be32(images, 12, "image header");
  const std::size_t pixels = std::size_t{rows} * cols;
  const std::size_t need = 16 + std::size_t{n} * pixels;
  if (images.size() < need) throw ParseError("truncated image payload", images.size());

  const auto lbl_magic = read_be32(labels, 0, "label header");
  if (lbl_magic != kLabelMagic) throw ParseError("bad label magic (expected 0x00000801)", 0);
  const auto n_labels = read_be32(labels, 4, "label header");
  if (n_labels != n)
    throw ParseError("label count " + std::to_string(n_labels) + " differs from image count " + std::to_string(n), 4);
  if (labels.size() < 8 + std::size_t{n}) throw ParseError("truncated label payload", labels.size());

  Dataset ds;
  ds.name = "mnist";
  ds.num_classes = 10;
  ds.inputs.resize(n, static_cast<Eigen::Index>(pixels));
  ds.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t* src = images.data() + 16 + i * pixels;
    for (std::size_t p = 0; p < pixels; ++p)
      ds.inputs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p)) = src[p] / 255.0;
    const int y = labels[8 + i];
    if (y > 9) throw ParseError("label " + std::to_string(y) + " outside 0..9", 8 + i);
    ds.labels[i] = y;
  }
  const auto h = fnv1a(images.first(need), 0xcbf29ce484222325ULL);
  ds.checksum = fnv1a_hex(labels.first(8 + std::size_t{n}), h);
  return ds;
}

Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path) {
  const auto images = read_maybe_gzip(images_path);
  const auto labels = read_maybe_gzip(labels_path);
  return parse_mnist_idx(images, labels);
}

Dataset subset(const Dataset& ds, std::span<const std::size_t> indices, const std::string& name) {
  Dataset out;
  out.name = name;
  out.num_classes = ds.num_classes;
  out.checksum = ds.checksum;
  out.inputs.resize(static_cast<Eigen::Index>(indices.size()), ds.inputs.cols());
  out.labels.resize(indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    out.inputs.row(static_cast<Eigen::Index>(k)) = ds.inputs.row(static_cast<Eigen::Index>(indices[k]));
    out.labels[k] = ds.labels[indices[k]];
  }
  return out;
}

std::pair<Dataset, Dataset> split_train_val(const Dataset& ds, const SplitSpec& spec) {
  if (spec.train_n + spec.val_n > ds.size())
    throw ConfigError("data.split", "train_n + val_n = " + std::to_string(spec.train_n + spec.val_n) +
                                        " exceeds dataset size " + std::to_string(ds.size()));
  std::vector<std::size_t> perm(ds.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  RngStream rng(spec.seed, 0x5e11);
  std::shuffle(perm.begin(), perm.end(), rng.engine());
  const std::span<const std::size_t> all(perm);
  return {subset(ds, all.first(spec.train_n), ds.name + "/train"),
          subset(ds, all.subspan(spec.train_n, spec.val_n), ds.name + "/val")};
}

Dataset synth_blobs(std::size_t n_per_class, int num_classes, int dim, double separation, std::uint64_t seed) {
  if (n_per_class < 1) throw ConfigError("data.n_per_class", "must be >= 1");
  if (num_classes < 1) throw ConfigError("data.num_classes", "must be >= 1");
  if (dim < 1) throw ConfigError("data.dim", "must be >= 1");
  if (num_classes > dim) throw ConfigError("data.num_classes", "must not exceed data.dim");
  if (!(separation > 0.0)) throw ConfigError("data.separation", "must be > 0");

  const std::size_t n = n_per_class * static_cast<std::size_t>(num_classes);
  const double offset = separation / std::sqrt(2.0);
  Dataset ds;
  ds.name = "blobs";
  ds.num_classes = num_classes;
  ds.inputs.resize(static_cast<Eigen::Index>(n), dim);
  ds.labels.resize(n);
  RngStream rng(seed, 0xb10b);
  for (std::size_t i = 0; i < n; ++i) {
    const int c = static_cast<int>(i % static_cast<std::size_t>(num_classes));
    ds.labels[i] = c;
    for (int j = 0; j < dim; ++j)
      ds.inputs(static_cast<Eigen::Index>(i), j) = rng.normal() + (j == c ? offset : 0.0);
  }
  const auto* bytes = reinterpret_cast<const std::uint8_t*>(ds.inputs.data());
  ds.checksum = fnv1a_hex({bytes, static_cast<std::size_t>(ds.inputs.size()) * sizeof(double)});
  return ds;
}

std::vector<std::vector<std::size_t>> batch_indices(std::size_t n, std::size_t batch_size, std::uint64_t epoch_seed) {
  if (batch_size < 1) throw ConfigError("data.batch_size", "must be >= 1");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  RngStream rng(epoch_seed, 0xba7c);
  std::shuffle(perm.begin(), perm.end(), rng.engine());
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t start = 0; start < n; start += batch_size)
    out.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(start),
                     perm.begin() + static_cast<std::ptrdiff_t>(std::min(n, start + batch_size)));
  return out;
}

Batch gather(const Dataset& ds, std::span<const std::size_t> indices) {
  Batch b;
  b.inputs.resize(static_cast<Eigen::Index>(indices.size()), ds.inputs.cols());
  b.labels.resize(indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    b.inputs.row(static_cast<Eigen::Index>(k)) = ds.inputs.row(static_cast<Eigen::Index>(indices[k]));
    b.labels[k] = ds.labels[indices[k]];
  }
  return b;
}

std::vector<Batch> batch_iterator(const Dataset& ds, std::size_t batch_size, std::uint64_t epoch_seed) {
  std::vector<Batch> out;
  for (const auto& idx : batch_indices(ds.size(), batch_size, epoch_seed)) out.push_back(gather(ds, idx));
  return out;
}

Standardizer Standardizer::fit(const Dataset& ds) {
  Standardizer s;
  s.mean = ds.inputs.colwise().mean();
  const RowMatrix centered = ds.inputs.rowwise() - s.mean;
  const Eigen::RowVectorXd var = centered.array().square().colwise().mean();
  s.inv_std = var.unaryExpr([](double v) { return v > 0.0 ? 1.0 / std::sqrt(v) : 1.0; });
  return s;
}

void Standardizer::apply(Dataset& ds) const {
  ds.inputs = ((ds.inputs.rowwise() - mean).array().rowwise() * inv_std.array()).matrix();
}

}  // namespace leap
