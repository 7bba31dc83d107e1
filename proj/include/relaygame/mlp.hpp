#pragma once

// Fully connected networks with exact reverse-mode gradients, RMSProp and
// soft target updates. Batches are row-major matrices, one sample per row.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "relaygame/channel.hpp"

namespace relaygame {

enum class Activation { relu, tanh, sigmoid_scaled, identity };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view name);

struct LayerSpec {
  std::size_t in_dim = 1;
  std::size_t out_dim = 1;
  Activation activation = Activation::identity;
  // Output range of sigmoid_scaled: lo + (hi - lo) * sigmoid(z).
  double lo = 0.0;
  double hi = 1.0;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  void resize(std::size_t r, std::size_t c) {
    rows = r;
    cols = c;
    data.resize(r * c);
  }
  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  static Matrix from_row(std::span<const double> values);
};

struct Layer {
  LayerSpec spec;
  std::vector<double> weights;  // out_dim x in_dim, row-major
  std::vector<double> bias;     // out_dim
};

/// Weights and biases of one network. Mutating accessors bump a revision
/// counter so caches from an earlier forward pass can be detected.
class Mlp {
 public:
  Mlp() = default;
  /// Zero-initialised parameters. Throws std::invalid_argument on a broken chain.
  explicit Mlp(std::vector<LayerSpec> specs);

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialisation.
  static Mlp random(std::vector<LayerSpec> specs, Rng& rng);

  /// Hidden layers of `hidden` units with `hidden_act`, then the given head.
  static std::vector<LayerSpec> chain(std::size_t in_dim, std::span<const std::size_t> hidden,
                                      Activation hidden_act, LayerSpec head);

  std::size_t num_layers() const { return layers_.size(); }
  std::size_t input_dim() const { return layers_.empty() ? 0 : layers_.front().spec.in_dim; }
  std::size_t output_dim() const { return layers_.empty() ? 0 : layers_.back().spec.out_dim; }
  std::size_t parameter_count() const;

  const Layer& layer(std::size_t i) const { return layers_.at(i); }
  Layer& mutable_layer(std::size_t i) {
    ++revision_;
    return layers_.at(i);
  }
  std::uint64_t revision() const { return revision_; }
  void touch() { ++revision_; }

  bool same_shape(const Mlp& other) const;

 private:
  std::vector<Layer> layers_;
  std::uint64_t revision_ = 0;
};

struct ForwardCache {
  const Mlp* owner = nullptr;
  std::uint64_t revision = 0;
  Matrix input;
  std::vector<Matrix> pre;   // per-layer pre-activations
  std::vector<Matrix> post;  // per-layer outputs

  const Matrix& output() const { return post.back(); }
};

struct MlpGradients {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> bias;

  explicit MlpGradients(const Mlp& shape_of);
  MlpGradients() = default;
  void zero();
  void scale(double factor);
};

/// Runs the batch through the network, reusing the cache's storage.
void forward(const Mlp& params, const Matrix& input, ForwardCache& cache);
ForwardCache forward(const Mlp& params, const Matrix& input);

/// Single-sample convenience wrapper.
std::vector<double> predict(const Mlp& params, std::span<const double> input);

/// Accumulates parameter gradients into `grads` (not cleared) and writes
/// d(objective)/d(input) into `input_grad`; either may be null.
/// Throws std::logic_error if the cache does not belong to `params` as it is now.
void backward(const Mlp& params, const ForwardCache& cache, const Matrix& output_grad,
              MlpGradients* grads, Matrix* input_grad);

struct RmsPropConfig {
  double learning_rate = 1e-3;
  double decay = 0.99;
  double floor = 1e-8;
};

class RmsPropState {
 public:
  RmsPropState() = default;
  RmsPropState(const Mlp& shape_of, RmsPropConfig cfg);

  const RmsPropConfig& config() const { return cfg_; }
  std::span<const double> weight_accumulator(std::size_t layer) const { return acc_w_.at(layer); }

  /// Descent step: params -= lr * g / sqrt(acc + floor).
  void step(Mlp& params, const MlpGradients& grads);

 private:
  RmsPropConfig cfg_;
  std::vector<std::vector<double>> acc_w_;
  std::vector<std::vector<double>> acc_b_;
};

/// target <- tau*online + (1 - tau)*target, 0 < tau <= 1.
void soft_update(Mlp& target, const Mlp& online, double tau);

/// Versioned text checkpoint; floats are written as hex so reloads are exact.
void save_checkpoint(const Mlp& params, std::ostream& out);
Mlp load_checkpoint(std::istream& in);

}  // namespace relaygame
