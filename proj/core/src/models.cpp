#include "leap/models.hpp"

#include <algorithm>
#include <cmath>

#include "leap/error.hpp"

namespace leap {

void validate(const MlpSpec& spec) {
  if (spec.layer_dims.size() < 2) throw ConfigError("model.layer_dims", "needs at least 2 entries");
  for (int d : spec.layer_dims)
    if (d < 1) throw ConfigError("model.layer_dims", "every dimension must be >= 1");
  if (!(spec.init_gain > 0.0)) throw ConfigError("model.init_gain", "must be > 0");
}

MlpSpec mlp_preset(const std::string& name) {
  MlpSpec s;
  if (name == "mlp3") s.layer_dims = {784, 100, 10};
  else if (name == "mlp4") s.layer_dims = {784, 256, 100, 10};
  else if (name == "mlp6") s.layer_dims = {784, 256, 128, 64, 32, 10};
  else if (name == "mlp8") s.layer_dims = {784, 256, 128, 64, 64, 32, 32, 10};
  else if (name == "mlp10") s.layer_dims = {784, 256, 128, 64, 64, 32, 32, 16, 16, 10};
  else throw ConfigError("model.preset", "unknown architecture '" + name + "'");
  return s;
}

std::vector<std::string> mlp_preset_names() { return {"mlp3", "mlp4", "mlp6", "mlp8", "mlp10"}; }

std::size_t param_count(const MlpSpec& spec) {
  std::size_t m = 0;
  for (std::size_t l = 0; l + 1 < spec.layer_dims.size(); ++l) {
    const auto din = static_cast<std::size_t>(spec.layer_dims[l]);
    const auto dout = static_cast<std::size_t>(spec.layer_dims[l + 1]);
    m += din * dout + dout;
  }
  return m;
}

namespace {

void check_theta(const MlpSpec& spec, std::span<const double> theta) {
  const auto m = param_count(spec);
  if (theta.size() != m)
    throw UsageError("theta has " + std::to_string(theta.size()) + " entries, model expects " +
                     std::to_string(m));
}

void check_batch(const MlpSpec& spec, const Eigen::Ref<const RowMatrix>& inputs,
                 std::span<const int> labels) {
  if (inputs.rows() < 1) throw UsageError("batch must contain at least one example");
  if (inputs.cols() != spec.input_dim())
    throw UsageError("batch has " + std::to_string(inputs.cols()) + " features, model expects " +
                     std::to_string(spec.input_dim()));
  if (static_cast<std::size_t>(inputs.rows()) != labels.size())
    throw UsageError("input rows and label count differ");
  for (int y : labels)
    if (y < 0 || y >= spec.num_classes()) throw UsageError("label out of range: " + std::to_string(y));
}

using ConstRowMap = Eigen::Map<const RowMatrix>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

struct LayerRef {
  ConstRowMap w;
  ConstVecMap b;
};

std::vector<LayerRef> views(const MlpSpec& spec, std::span<const double> theta) {
  std::vector<LayerRef> out;
  out.reserve(spec.num_layers());
  const double* p = theta.data();
  for (std::size_t l = 0; l < spec.num_layers(); ++l) {
    const int din = spec.layer_dims[l];
    const int dout = spec.layer_dims[l + 1];
    out.push_back({ConstRowMap(p, dout, din), ConstVecMap(p + static_cast<std::ptrdiff_t>(din) * dout, dout)});
    p += static_cast<std::ptrdiff_t>(din) * dout + dout;
  }
  return out;
}

void check_finite(const RowMatrix& m, std::size_t layer) {
  if (!m.allFinite()) throw NumericFault("activations of layer", layer);
}

// Forward pass keeping every layer's pre-activation; the last entry holds the logits.
std::vector<RowMatrix> forward_all(const std::vector<LayerRef>& layers,
                                   const Eigen::Ref<const RowMatrix>& inputs) {
  std::vector<RowMatrix> pre;
  pre.reserve(layers.size());
  RowMatrix act = inputs;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    RowMatrix z = act * layers[l].w.transpose();
    z.rowwise() += layers[l].b.transpose();
    check_finite(z, l);
    if (l + 1 < layers.size()) act = z.cwiseMax(0.0);
    pre.push_back(std::move(z));
  }
  return pre;
}

// Row-wise log-softmax cross-entropy; returns mean loss and optionally the
// softmax probabilities.
double cross_entropy(const RowMatrix& logits, std::span<const int> labels, RowMatrix* probs) {
  const Eigen::Index n = logits.rows();
  double total = 0.0;
  if (probs) probs->resize(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto row = logits.row(i);
    const double mx = row.maxCoeff();
    const double lse = mx + std::log((row.array() - mx).exp().sum());
    total += lse - row(labels[static_cast<std::size_t>(i)]);
    if (probs) probs->row(i) = (row.array() - lse).exp();
  }
  return total / static_cast<double>(n);
}

}  // namespace

std::vector<DenseLayer> unflatten(const MlpSpec& spec, std::span<const double> theta) {
  check_theta(spec, theta);
  std::vector<DenseLayer> out;
  for (const auto& v : views(spec, theta)) out.push_back({v.w, v.b});
  return out;
}

ParamVector flatten(const MlpSpec& spec, const std::vector<DenseLayer>& layers) {
  if (layers.size() != spec.num_layers()) throw UsageError("layer count does not match spec");
  ParamVector theta;
  theta.reserve(param_count(spec));
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& w = layers[l].weights;
    if (w.rows() != spec.layer_dims[l + 1] || w.cols() != spec.layer_dims[l] ||
        layers[l].bias.size() != spec.layer_dims[l + 1])
      throw UsageError("layer " + std::to_string(l) + " shape does not match spec");
    theta.insert(theta.end(), w.data(), w.data() + w.size());
    theta.insert(theta.end(), layers[l].bias.data(), layers[l].bias.data() + layers[l].bias.size());
  }
  return theta;
}

ParamVector init_params(const MlpSpec& spec, RngStream& rng) {
  validate(spec);
  ParamVector theta;
  theta.reserve(param_count(spec));
  for (std::size_t l = 0; l < spec.num_layers(); ++l) {
    const int din = spec.layer_dims[l];
    const int dout = spec.layer_dims[l + 1];
    const double sd = std::sqrt(spec.init_gain / din);
    for (long k = 0; k < static_cast<long>(din) * dout; ++k) theta.push_back(sd * rng.normal());
    theta.insert(theta.end(), static_cast<std::size_t>(dout), 0.0);
  }
  return theta;
}

ForwardResult forward_loss(const MlpSpec& spec, std::span<const double> theta,
                           const Eigen::Ref<const RowMatrix>& inputs, std::span<const int> labels) {
  check_theta(spec, theta);
  check_batch(spec, inputs, labels);
  auto pre = forward_all(views(spec, theta), inputs);
  ForwardResult out;
  out.loss = cross_entropy(pre.back(), labels, nullptr);
  if (!std::isfinite(out.loss)) throw NumericFault("loss of layer", spec.num_layers() - 1);
  out.logits = std::move(pre.back());
  return out;
}

ForwardResult forward_loss(const MlpSpec& spec, std::span<const double> theta, const Batch& batch) {
  return forward_loss(spec, theta, batch.inputs, batch.labels);
}

LossGrad loss_and_gradient(const MlpSpec& spec, std::span<const double> theta,
                           const Eigen::Ref<const RowMatrix>& inputs, std::span<const int> labels) {
  check_theta(spec, theta);
  check_batch(spec, inputs, labels);
  const auto layers = views(spec, theta);
  const auto pre = forward_all(layers, inputs);
  const auto n = static_cast<double>(inputs.rows());

  RowMatrix delta;
  LossGrad out;
  out.loss = cross_entropy(pre.back(), labels, &delta);
  if (!std::isfinite(out.loss)) throw NumericFault("loss of layer", spec.num_layers() - 1);
  for (Eigen::Index i = 0; i < delta.rows(); ++i) delta(i, labels[static_cast<std::size_t>(i)]) -= 1.0;
  delta /= n;

  out.grad.assign(theta.size(), 0.0);
  // Offsets of each layer's block inside the flat vector.
  std::vector<std::ptrdiff_t> offset(layers.size() + 1, 0);
  for (std::size_t l = 0; l < layers.size(); ++l)
    offset[l + 1] = offset[l] + layers[l].w.size() + layers[l].b.size();

  for (std::size_t l = layers.size(); l-- > 0;) {
    const RowMatrix act_in = l == 0 ? RowMatrix(inputs) : RowMatrix(pre[l - 1].cwiseMax(0.0));
    Eigen::Map<RowMatrix> gw(out.grad.data() + offset[l], layers[l].w.rows(), layers[l].w.cols());
    Eigen::Map<Eigen::VectorXd> gb(out.grad.data() + offset[l] + layers[l].w.size(), layers[l].b.size());
    gw.noalias() = delta.transpose() * act_in;
    gb = delta.colwise().sum().transpose();
    if (l > 0) {
      RowMatrix upstream = delta * layers[l].w;
      delta = (pre[l - 1].array() > 0.0).select(upstream, 0.0);
    }
  }
  return out;
}

ParamVector backward(const MlpSpec& spec, std::span<const double> theta,
                     const Eigen::Ref<const RowMatrix>& inputs, std::span<const int> labels) {
  return loss_and_gradient(spec, theta, inputs, labels).grad;
}

ParamVector backward(const MlpSpec& spec, std::span<const double> theta, const Batch& batch) {
  return backward(spec, theta, batch.inputs, batch.labels);
}

LossGrad full_loss_and_gradient(const MlpSpec& spec, std::span<const double> theta,
                                const Eigen::Ref<const RowMatrix>& inputs,
                                std::span<const int> labels, std::size_t chunk_rows) {
  const auto n = static_cast<std::size_t>(inputs.rows());
  if (n == 0) throw UsageError("empty example set");
  chunk_rows = std::max<std::size_t>(chunk_rows, 1);
  LossGrad total;
  total.grad.assign(theta.size(), 0.0);
  for (std::size_t start = 0; start < n; start += chunk_rows) {
    const std::size_t len = std::min(chunk_rows, n - start);
    const auto part = loss_and_gradient(spec, theta,
                                        inputs.middleRows(static_cast<Eigen::Index>(start),
                                                          static_cast<Eigen::Index>(len)),
                                        labels.subspan(start, len));
    const double w = static_cast<double>(len) / static_cast<double>(n);
    total.loss += w * part.loss;
    for (std::size_t i = 0; i < total.grad.size(); ++i) total.grad[i] += w * part.grad[i];
  }
  return total;
}

std::vector<int> argmax_rows(const Eigen::Ref<const RowMatrix>& logits) {
  std::vector<int> out(static_cast<std::size_t>(logits.rows()));
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    int best = 0;
    for (Eigen::Index c = 1; c < logits.cols(); ++c)
      if (logits(i, c) > logits(i, best)) best = static_cast<int>(c);
    out[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

double predict_error_rate(const MlpSpec& spec, std::span<const double> theta,
                          const Eigen::Ref<const RowMatrix>& inputs, std::span<const int> labels) {
  check_theta(spec, theta);
  check_batch(spec, inputs, labels);
  const auto layers = views(spec, theta);
  const std::size_t n = labels.size();
  const std::size_t chunk = 4096;
  std::size_t wrong = 0;
  for (std::size_t start = 0; start < n; start += chunk) {
    const std::size_t len = std::min(chunk, n - start);
    const auto pre = forward_all(layers, inputs.middleRows(static_cast<Eigen::Index>(start),
                                                           static_cast<Eigen::Index>(len)));
    const auto pred = argmax_rows(pre.back());
    for (std::size_t i = 0; i < len; ++i)
      if (pred[i] != labels[start + i]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(n);
}

}  // namespace leap
