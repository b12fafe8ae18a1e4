#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "leap/rng.hpp"
#include "leap/tensor.hpp"

namespace leap {

enum class Activation { ReLU };
enum class LossKind { SoftmaxCrossEntropy };

/// Dense network description. layer_dims runs from input to output, e.g.
/// {784, 100, 10}. Hidden layers use ReLU; the head is softmax cross-entropy.
///
/// Weights are drawn N(0, init_gain / fan_in) (He-normal for the default
/// gain of 2); biases start at zero.
struct MlpSpec {
  std::vector<int> layer_dims;
  Activation activation = Activation::ReLU;
  LossKind loss = LossKind::SoftmaxCrossEntropy;
  double init_gain = 2.0;

  std::size_t num_layers() const noexcept { return layer_dims.size() - 1; }
  int input_dim() const { return layer_dims.front(); }
  int num_classes() const { return layer_dims.back(); }
};

void validate(const MlpSpec& spec);

/// Named architectures from the MLP-L family ("mlp3", "mlp4", "mlp6", "mlp8", "mlp10").
MlpSpec mlp_preset(const std::string& name);
std::vector<std::string> mlp_preset_names();

/// Parameter count: sum over layers of d_in * d_out + d_out.
std::size_t param_count(const MlpSpec& spec);

/// One layer's parameters. W is d_out x d_in, row-major.
struct DenseLayer {
  RowMatrix weights;
  Eigen::VectorXd bias;
};

/// Layer-major flattening: for each layer, W (row-major, d_out x d_in) then b.
std::vector<DenseLayer> unflatten(const MlpSpec& spec, std::span<const double> theta);
ParamVector flatten(const MlpSpec& spec, const std::vector<DenseLayer>& layers);

ParamVector init_params(const MlpSpec& spec, RngStream& rng);

struct ForwardResult {
  double loss = 0.0;
  RowMatrix logits;
};

/// Mean softmax cross-entropy over the rows of `inputs`.
ForwardResult forward_loss(const MlpSpec& spec, std::span<const double> theta,
                           const Eigen::Ref<const RowMatrix>& inputs, std::span<const int> labels);
ForwardResult forward_loss(const MlpSpec& spec, std::span<const double> theta, const Batch& batch);

/// Exact reverse-mode gradient of forward_loss, same layout as theta.
/// The ReLU subgradient at zero is taken as zero.
ParamVector backward(const MlpSpec& spec, std::span<const double> theta,
                     const Eigen::Ref<const RowMatrix>& inputs, std::span<const int> labels);
ParamVector backward(const MlpSpec& spec, std::span<const double> theta, const Batch& batch);

struct LossGrad {
  double loss = 0.0;
  ParamVector grad;
};

/// Loss and gradient in one forward/backward pass.
LossGrad loss_and_gradient(const MlpSpec& spec, std::span<const double> theta,
                           const Eigen::Ref<const RowMatrix>& inputs, std::span<const int> labels);

/// Loss and gradient over a large example set, processed in row chunks and
/// combined as an example-weighted mean. Chunk order is fixed.
LossGrad full_loss_and_gradient(const MlpSpec& spec, std::span<const double> theta,
                                const Eigen::Ref<const RowMatrix>& inputs,
                                std::span<const int> labels, std::size_t chunk_rows = 2048);

/// Argmax-logit misclassification rate; ties go to the lowest class index.
double predict_error_rate(const MlpSpec& spec, std::span<const double> theta,
                          const Eigen::Ref<const RowMatrix>& inputs, std::span<const int> labels);

/// Argmax with lowest-index tie breaking, per row.
std::vector<int> argmax_rows(const Eigen::Ref<const RowMatrix>& logits);

}  // namespace leap
