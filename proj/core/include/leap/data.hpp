#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "leap/tensor.hpp"

namespace leap {

struct Dataset {
  RowMatrix inputs;  ///< n x d
  std::vector<int> labels;
  int num_classes = 0;
  std::string name;
  std::string checksum;  ///< FNV-1a 64 of the source payload, hex

  std::size_t size() const noexcept { return labels.size(); }
  int dim() const noexcept { return static_cast<int>(inputs.cols()); }
};

/// Checks n >= 1, finite inputs and labels in [0, num_classes).
void validate(const Dataset& ds);

/// Parse a pair of big-endian IDX files (images magic 0x00000803, labels
/// 0x00000801). Gzip-compressed files are detected by their 0x1f8b prefix and
/// inflated transparently. Pixels are scaled by 1/255; num_classes is 10.
/// Errors are ParseError with the offending byte offset (in the inflated stream).
Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path);

/// Same parser over in-memory IDX payloads (already inflated).
Dataset parse_mnist_idx(std::span<const std::uint8_t> images, std::span<const std::uint8_t> labels);

struct SplitSpec {
  std::size_t train_n = 50000;
  std::size_t val_n = 10000;
  std::uint64_t seed = 0;
};

/// Seeded permutation; the first train_n indices go to train, the next val_n
/// to validation.
std::pair<Dataset, Dataset> split_train_val(const Dataset& ds, const SplitSpec& spec);

/// Rows `indices` of ds, in that order.
Dataset subset(const Dataset& ds, std::span<const std::size_t> indices, const std::string& name);

/// Isotropic unit-variance Gaussian blobs. Class c is centred at
/// (separation / sqrt(2)) * e_c, so every pair of centres is `separation`
/// apart; requires num_classes <= dim. Classes are interleaved
/// (row i has label i % num_classes). For separation >= 10 the classes are
/// linearly separable with overwhelming probability (5 sd margin).
Dataset synth_blobs(std::size_t n_per_class, int num_classes, int dim, double separation, std::uint64_t seed);

/// Seeded shuffle of 0..n-1 cut into ceil(n / batch_size) batches; the last
/// batch may be partial.
std::vector<std::vector<std::size_t>> batch_indices(std::size_t n, std::size_t batch_size, std::uint64_t epoch_seed);

Batch gather(const Dataset& ds, std::span<const std::size_t> indices);

/// Materialised batches for one epoch.
std::vector<Batch> batch_iterator(const Dataset& ds, std::size_t batch_size, std::uint64_t epoch_seed);

struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd inv_std;  ///< 1/std, with zero-variance features left unscaled

  static Standardizer fit(const Dataset& ds);
  void apply(Dataset& ds) const;
};

/// FNV-1a 64-bit hash as a 16-digit hex string.
std::string fnv1a_hex(std::span<const std::uint8_t> bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

}  // namespace leap
