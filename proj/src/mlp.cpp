#include "relaygame/mlp.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "relaygame/kernels.hpp"

namespace relaygame {

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void activate(const LayerSpec& spec, const Matrix& pre, Matrix& post) {
  post.resize(pre.rows, pre.cols);
  const std::size_t n = pre.data.size();
  const double* z = pre.data.data();
  double* a = post.data.data();
  switch (spec.activation) {
    case Activation::relu:
      for (std::size_t i = 0; i < n; ++i) a[i] = z[i] > 0.0 ? z[i] : 0.0;
      break;
    case Activation::tanh:
      for (std::size_t i = 0; i < n; ++i) a[i] = std::tanh(z[i]);
      break;
    case Activation::sigmoid_scaled:
      for (std::size_t i = 0; i < n; ++i) a[i] = spec.lo + (spec.hi - spec.lo) * sigmoid(z[i]);
      break;
    case Activation::identity:
      for (std::size_t i = 0; i < n; ++i) a[i] = z[i];
      break;
  }
}

// grad <- grad * act'(pre), in place.
void activation_backward(const LayerSpec& spec, const Matrix& pre, const Matrix& post,
                         std::vector<double>& grad) {
  const std::size_t n = grad.size();
  const double* z = pre.data.data();
  const double* a = post.data.data();
  switch (spec.activation) {
    case Activation::relu:
      for (std::size_t i = 0; i < n; ++i) grad[i] = z[i] > 0.0 ? grad[i] : 0.0;
      break;
    case Activation::tanh:
      for (std::size_t i = 0; i < n; ++i) grad[i] *= 1.0 - a[i] * a[i];
      break;
    case Activation::sigmoid_scaled:
      for (std::size_t i = 0; i < n; ++i) {
        const double s = sigmoid(z[i]);
        grad[i] *= (spec.hi - spec.lo) * s * (1.0 - s);
      }
      break;
    case Activation::identity:
      break;
  }
}

void check_chain(const std::vector<LayerSpec>& specs) {
  if (specs.empty()) throw std::invalid_argument("Mlp: at least one layer required");
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (specs[i].in_dim == 0 || specs[i].out_dim == 0) {
      throw std::invalid_argument("Mlp: layer dimensions must be >= 1");
    }
    if (i > 0 && specs[i].in_dim != specs[i - 1].out_dim) {
      throw std::invalid_argument("Mlp: layer " + std::to_string(i) + " input does not match previous output");
    }
  }
}

}  // namespace

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid_scaled: return "sigmoid-scaled";
    case Activation::identity: return "identity";
  }
  return "identity";
}

Activation activation_from_string(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  if (name == "sigmoid-scaled") return Activation::sigmoid_scaled;
  if (name == "identity") return Activation::identity;
  throw std::invalid_argument("unknown activation: " + std::string(name));
}

Matrix Matrix::from_row(std::span<const double> values) {
  Matrix m(1, values.size());
  std::copy(values.begin(), values.end(), m.data.begin());
  return m;
}

Mlp::Mlp(std::vector<LayerSpec> specs) {
  check_chain(specs);
  layers_.reserve(specs.size());
  for (const LayerSpec& s : specs) {
    layers_.push_back(Layer{s, std::vector<double>(s.out_dim * s.in_dim, 0.0),
                            std::vector<double>(s.out_dim, 0.0)});
  }
}

Mlp Mlp::random(std::vector<LayerSpec> specs, Rng& rng) {
  Mlp net(std::move(specs));
  for (Layer& layer : net.layers_) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.spec.in_dim));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& w : layer.weights) w = dist(rng);
    for (double& b : layer.bias) b = dist(rng);
  }
  return net;
}

std::vector<LayerSpec> Mlp::chain(std::size_t in_dim, std::span<const std::size_t> hidden,
                                  Activation hidden_act, LayerSpec head) {
  std::vector<LayerSpec> specs;
  std::size_t prev = in_dim;
  for (std::size_t width : hidden) {
    specs.push_back(LayerSpec{prev, width, hidden_act});
    prev = width;
  }
  head.in_dim = prev;
  specs.push_back(head);
  return specs;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const Layer& l : layers_) n += l.weights.size() + l.bias.size();
  return n;
}

bool Mlp::same_shape(const Mlp& other) const {
  if (layers_.size() != other.layers_.size()) return false;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (!(layers_[i].spec == other.layers_[i].spec)) return false;
  }
  return true;
}

MlpGradients::MlpGradients(const Mlp& shape_of) {
  for (std::size_t i = 0; i < shape_of.num_layers(); ++i) {
    weights.emplace_back(shape_of.layer(i).weights.size(), 0.0);
    bias.emplace_back(shape_of.layer(i).bias.size(), 0.0);
  }
}

void MlpGradients::zero() {
  for (auto& w : weights) std::fill(w.begin(), w.end(), 0.0);
  for (auto& b : bias) std::fill(b.begin(), b.end(), 0.0);
}

void MlpGradients::scale(double factor) {
  for (auto& w : weights) for (double& v : w) v *= factor;
  for (auto& b : bias) for (double& v : b) v *= factor;
}

void forward(const Mlp& params, const Matrix& input, ForwardCache& cache) {
  if (params.num_layers() == 0 || input.cols != params.input_dim()) {
    throw std::invalid_argument("forward: input width " + std::to_string(input.cols) +
                                " does not match network input " +
                                std::to_string(params.input_dim()));
  }
  const auto& k = kernels::active();
  cache.owner = &params;
  cache.revision = params.revision();
  cache.input = input;
  cache.pre.resize(params.num_layers());
  cache.post.resize(params.num_layers());
  const Matrix* x = &cache.input;
  for (std::size_t l = 0; l < params.num_layers(); ++l) {
    const Layer& layer = params.layer(l);
    Matrix& z = cache.pre[l];
    z.resize(input.rows, layer.spec.out_dim);
    k.affine_forward(x->data.data(), layer.weights.data(), layer.bias.data(), z.data.data(),
                     input.rows, layer.spec.in_dim, layer.spec.out_dim);
    activate(layer.spec, z, cache.post[l]);
    x = &cache.post[l];
  }
}

ForwardCache forward(const Mlp& params, const Matrix& input) {
  ForwardCache cache;
  forward(params, input, cache);
  return cache;
}

std::vector<double> predict(const Mlp& params, std::span<const double> input) {
  const ForwardCache cache = forward(params, Matrix::from_row(input));
  return cache.output().data;
}

void backward(const Mlp& params, const ForwardCache& cache, const Matrix& output_grad,
              MlpGradients* grads, Matrix* input_grad) {
  if (cache.owner != &params || cache.revision != params.revision()) {
    throw std::logic_error("backward: cache is stale or belongs to another network");
  }
  const std::size_t batch = cache.input.rows;
  if (output_grad.rows != batch || output_grad.cols != params.output_dim()) {
    throw std::invalid_argument("backward: output gradient shape mismatch");
  }
  if (grads != nullptr && grads->weights.size() != params.num_layers()) {
    throw std::invalid_argument("backward: gradient container shape mismatch");
  }
  const auto& k = kernels::active();
  std::vector<double> delta = output_grad.data;
  std::vector<double> next;
  for (std::size_t l = params.num_layers(); l-- > 0;) {
    const Layer& layer = params.layer(l);
    activation_backward(layer.spec, cache.pre[l], cache.post[l], delta);
    const Matrix& x = l == 0 ? cache.input : cache.post[l - 1];
    if (grads != nullptr) {
      k.affine_backward_params(delta.data(), x.data.data(), grads->weights[l].data(),
                               grads->bias[l].data(), batch, layer.spec.in_dim,
                               layer.spec.out_dim);
    }
    if (l == 0 && input_grad == nullptr) break;
    next.resize(batch * layer.spec.in_dim);
    k.affine_backward_input(delta.data(), layer.weights.data(), next.data(), batch,
                            layer.spec.in_dim, layer.spec.out_dim);
    delta.swap(next);
  }
  if (input_grad != nullptr) {
    input_grad->resize(batch, params.input_dim());
    input_grad->data = delta;
  }
}

RmsPropState::RmsPropState(const Mlp& shape_of, RmsPropConfig cfg) : cfg_(cfg) {
  for (std::size_t i = 0; i < shape_of.num_layers(); ++i) {
    acc_w_.emplace_back(shape_of.layer(i).weights.size(), 0.0);
    acc_b_.emplace_back(shape_of.layer(i).bias.size(), 0.0);
  }
}

void RmsPropState::step(Mlp& params, const MlpGradients& grads) {
  if (acc_w_.size() != params.num_layers() || grads.weights.size() != params.num_layers()) {
    throw std::invalid_argument("RmsPropState::step: shape mismatch");
  }
  const auto& k = kernels::active();
  for (std::size_t l = 0; l < params.num_layers(); ++l) {
    Layer& layer = params.mutable_layer(l);
    k.rmsprop(layer.weights.data(), grads.weights[l].data(), acc_w_[l].data(),
              layer.weights.size(), cfg_.decay, cfg_.learning_rate, cfg_.floor);
    k.rmsprop(layer.bias.data(), grads.bias[l].data(), acc_b_[l].data(), layer.bias.size(),
              cfg_.decay, cfg_.learning_rate, cfg_.floor);
  }
}

void soft_update(Mlp& target, const Mlp& online, double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) throw std::invalid_argument("soft_update: tau must be in (0, 1]");
  if (!target.same_shape(online)) throw std::invalid_argument("soft_update: shape mismatch");
  const auto& k = kernels::active();
  for (std::size_t l = 0; l < target.num_layers(); ++l) {
    Layer& t = target.mutable_layer(l);
    const Layer& o = online.layer(l);
    k.soft_update(t.weights.data(), o.weights.data(), t.weights.size(), tau);
    k.soft_update(t.bias.data(), o.bias.data(), t.bias.size(), tau);
  }
}

namespace {

constexpr std::string_view kMagic = "relaygame-mlp";
constexpr int kVersion = 1;

void write_values(std::ostream& out, const char* tag, const std::vector<double>& values) {
  out << tag;
  char buf[64];
  for (double v : values) {
    std::snprintf(buf, sizeof buf, " %a", v);
    out << buf;
  }
  out << '\n';
}

void read_values(std::istream& in, const char* tag, std::vector<double>& values) {
  std::string token;
  if (!(in >> token) || token != tag) throw std::runtime_error(std::string("checkpoint: expected ") + tag);
  for (double& v : values) {
    if (!(in >> token)) throw std::runtime_error("checkpoint: truncated values");
    char* end = nullptr;
    v = std::strtod(token.c_str(), &end);
    if (end == token.c_str() || *end != '\0') throw std::runtime_error("checkpoint: bad number " + token);
  }
}

}  // namespace

void save_checkpoint(const Mlp& params, std::ostream& out) {
  out << kMagic << ' ' << kVersion << '\n';
  out << "layers " << params.num_layers() << '\n';
  char buf[64];
  for (std::size_t l = 0; l < params.num_layers(); ++l) {
    const LayerSpec& s = params.layer(l).spec;
    out << "layer " << s.in_dim << ' ' << s.out_dim << ' ' << to_string(s.activation);
    std::snprintf(buf, sizeof buf, " %a %a", s.lo, s.hi);
    out << buf << '\n';
    write_values(out, "w", params.layer(l).weights);
    write_values(out, "b", params.layer(l).bias);
  }
}

Mlp load_checkpoint(std::istream& in) {
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != kMagic) throw std::runtime_error("checkpoint: bad header");
  if (version != kVersion) throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  std::string word;
  std::size_t count = 0;
  if (!(in >> word >> count) || word != "layers" || count == 0) {
    throw std::runtime_error("checkpoint: bad layer count");
  }
  std::vector<LayerSpec> specs(count);
  std::vector<std::pair<std::vector<double>, std::vector<double>>> values;
  for (std::size_t l = 0; l < count; ++l) {
    std::string act, lo, hi;
    if (!(in >> word >> specs[l].in_dim >> specs[l].out_dim >> act >> lo >> hi) || word != "layer") {
      throw std::runtime_error("checkpoint: bad layer record");
    }
    specs[l].activation = activation_from_string(act);
    specs[l].lo = std::strtod(lo.c_str(), nullptr);
    specs[l].hi = std::strtod(hi.c_str(), nullptr);
    std::vector<double> w(specs[l].in_dim * specs[l].out_dim), b(specs[l].out_dim);
    read_values(in, "w", w);
    read_values(in, "b", b);
    values.emplace_back(std::move(w), std::move(b));
  }
  Mlp net(specs);
  for (std::size_t l = 0; l < count; ++l) {
    Layer& layer = net.mutable_layer(l);
    layer.weights = std::move(values[l].first);
    layer.bias = std::move(values[l].second);
  }
  return net;
}

}  // namespace relaygame
