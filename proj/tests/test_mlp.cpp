#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "relaygame/mlp.hpp"

using namespace relaygame;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix m(r, c);
  for (double& v : m.data) v = u(rng);
  return m;
}

double weighted_output(const Mlp& net, const Matrix& x, const Matrix& weights) {
  const ForwardCache c = forward(net, x);
  double s = 0.0;
  for (std::size_t i = 0; i < weights.data.size(); ++i) s += c.output().data[i] * weights.data[i];
  return s;
}

double rel_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double scale = std::max({std::sqrt(na), std::sqrt(nb), 1e-8});
  return std::sqrt(diff) / scale;
}

Mlp random_net(Rng& rng) {
  std::uniform_int_distribution<int> layers(1, 3), width(1, 6), act(0, 3);
  const Activation acts[] = {Activation::relu, Activation::tanh, Activation::sigmoid_scaled,
                             Activation::identity};
  std::vector<LayerSpec> specs;
  std::size_t in = static_cast<std::size_t>(width(rng));
  const int n = layers(rng);
  for (int l = 0; l < n; ++l) {
    LayerSpec s{in, static_cast<std::size_t>(width(rng)), acts[act(rng)], -0.5, 2.0};
    specs.push_back(s);
    in = s.out_dim;
  }
  Mlp net = Mlp::random(specs, rng);
  // Non-zero biases so relu units are not all aligned with the origin.
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    for (double& b : net.mutable_layer(l).bias) b = u(rng);
  }
  return net;
}

}  // namespace

TEST_CASE("forward pass examples") {
  Mlp zero({LayerSpec{3, 2, Activation::identity}});
  const std::vector<double> out = predict(zero, std::vector<double>{1.0, -2.0, 0.5});
  CHECK(out == std::vector<double>{0.0, 0.0});

  Mlp affine({LayerSpec{1, 1, Activation::identity}});
  affine.mutable_layer(0).weights[0] = 2.0;
  affine.mutable_layer(0).bias[0] = 1.0;
  CHECK(predict(affine, std::vector<double>{3.0})[0] == 7.0);

  Rng rng(1);
  const Mlp net = random_net(rng);
  const Matrix x = random_matrix(4, net.input_dim(), rng);
  CHECK(forward(net, x).output().data == forward(net, x).output().data);
}

TEST_CASE("sigmoid-scaled head respects its range") {
  Rng rng(2);
  Mlp net = Mlp::random({LayerSpec{2, 3, Activation::sigmoid_scaled, -1.0, 4.0}}, rng);
  for (int i = 0; i < 100; ++i) {
    const Matrix x = random_matrix(1, 2, rng);
    const ForwardCache c = forward(net, x);
    for (double v : c.output().data) {
      REQUIRE(v > -1.0);
      REQUIRE(v < 4.0);
    }
  }
  CHECK(activation_from_string("sigmoid-scaled") == Activation::sigmoid_scaled);
  CHECK(to_string(Activation::relu) == "relu");
  CHECK_THROWS(activation_from_string("softmax"));
}

TEST_CASE("shape violations are rejected") {
  CHECK_THROWS_AS(Mlp({LayerSpec{2, 3}, LayerSpec{4, 1}}), std::invalid_argument);
  CHECK_THROWS_AS(Mlp({LayerSpec{0, 3}}), std::invalid_argument);
  Mlp net({LayerSpec{2, 1}});
  CHECK_THROWS(forward(net, Matrix(1, 3)));
}

TEST_CASE("backward matches central finite differences on random networks") {
  Rng rng(123);
  const double h = 1e-5;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    Mlp net = random_net(rng);
    const Matrix x = random_matrix(3, net.input_dim(), rng);
    const Matrix r = random_matrix(3, net.output_dim(), rng);

    const ForwardCache cache = forward(net, x);
    MlpGradients grads(net);
    Matrix dx;
    backward(net, cache, r, &grads, &dx);

    std::vector<double> analytic, numeric;
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
      for (std::size_t i = 0; i < net.layer(l).weights.size(); ++i) {
        const double keep = net.layer(l).weights[i];
        net.mutable_layer(l).weights[i] = keep + h;
        const double up = weighted_output(net, x, r);
        net.mutable_layer(l).weights[i] = keep - h;
        const double down = weighted_output(net, x, r);
        net.mutable_layer(l).weights[i] = keep;
        analytic.push_back(grads.weights[l][i]);
        numeric.push_back((up - down) / (2 * h));
      }
      for (std::size_t i = 0; i < net.layer(l).bias.size(); ++i) {
        const double keep = net.layer(l).bias[i];
        net.mutable_layer(l).bias[i] = keep + h;
        const double up = weighted_output(net, x, r);
        net.mutable_layer(l).bias[i] = keep - h;
        const double down = weighted_output(net, x, r);
        net.mutable_layer(l).bias[i] = keep;
        analytic.push_back(grads.bias[l][i]);
        numeric.push_back((up - down) / (2 * h));
      }
    }
    for (std::size_t i = 0; i < x.data.size(); ++i) {
      Matrix xp = x, xm = x;
      xp.data[i] += h;
      xm.data[i] -= h;
      analytic.push_back(dx.data[i]);
      numeric.push_back((weighted_output(net, xp, r) - weighted_output(net, xm, r)) / (2 * h));
    }
    worst = std::max(worst, rel_error(analytic, numeric));
  }
  CHECK(worst <= 1e-4);
}

TEST_CASE("linear network input gradient is the transposed map") {
  Rng rng(4);
  const Mlp net = Mlp::random({LayerSpec{3, 2, Activation::identity}}, rng);
  const Matrix x = random_matrix(1, 3, rng);
  Matrix dy(1, 2);
  dy(0, 0) = 0.7;
  dy(0, 1) = -1.3;
  const ForwardCache c = forward(net, x);
  Matrix dx;
  backward(net, c, dy, nullptr, &dx);
  const auto& w = net.layer(0).weights;
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(dx(0, i) == doctest::Approx(0.7 * w[i] - 1.3 * w[3 + i]).epsilon(1e-14));
  }
}

TEST_CASE("zero output gradient gives zero gradients") {
  Rng rng(5);
  const Mlp net = random_net(rng);
  const Matrix x = random_matrix(2, net.input_dim(), rng);
  const ForwardCache c = forward(net, x);
  MlpGradients g(net);
  Matrix dx;
  backward(net, c, Matrix(2, net.output_dim()), &g, &dx);
  for (const auto& layer : g.weights) {
    for (double v : layer) CHECK(v == 0.0);
  }
  for (double v : dx.data) CHECK(v == 0.0);
}

TEST_CASE("stale caches are rejected") {
  Rng rng(6);
  Mlp net = random_net(rng);
  const Matrix x = random_matrix(2, net.input_dim(), rng);
  const ForwardCache c = forward(net, x);
  net.mutable_layer(0).weights[0] += 1.0;
  MlpGradients g(net);
  CHECK_THROWS_AS(backward(net, c, Matrix(2, net.output_dim()), &g, nullptr), std::logic_error);
  Mlp other = net;
  CHECK_THROWS_AS(backward(other, forward(net, x), Matrix(2, net.output_dim()), &g, nullptr),
                  std::logic_error);
}

TEST_CASE("rmsprop: zero gradient leaves parameters unchanged") {
  Rng rng(7);
  Mlp net = random_net(rng);
  const Mlp before = net;
  RmsPropState opt(net, {});
  MlpGradients g(net);
  opt.step(net, g);
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    CHECK(net.layer(l).weights == before.layer(l).weights);
    CHECK(net.layer(l).bias == before.layer(l).bias);
  }
}

TEST_CASE("rmsprop: constant gradient step tends to the learning rate") {
  Mlp net({LayerSpec{1, 1, Activation::identity}});
  RmsPropState opt(net, {0.01, 0.99, 1e-8});
  MlpGradients g(net);
  g.weights[0][0] = 3.0;
  double prev = 0.0, step = 0.0;
  for (int i = 0; i < 3000; ++i) {
    opt.step(net, g);
    step = prev - net.layer(0).weights[0];
    prev = net.layer(0).weights[0];
  }
  CHECK(step == doctest::Approx(0.01).epsilon(1e-6));
  CHECK(opt.weight_accumulator(0)[0] == doctest::Approx(9.0).epsilon(1e-6));
}

TEST_CASE("rmsprop minimises a quadratic bowl") {
  Mlp net({LayerSpec{1, 1, Activation::identity}});
  net.mutable_layer(0).weights[0] = 1.0;
  RmsPropState opt(net, {0.01, 0.99, 1e-8});
  MlpGradients g(net);
  for (int i = 0; i < 500; ++i) {
    g.weights[0][0] = 2.0 * net.layer(0).weights[0];
    opt.step(net, g);
  }
  CHECK(std::abs(net.layer(0).weights[0]) < 0.1);
}

TEST_CASE("soft update") {
  Mlp target({LayerSpec{1, 1, Activation::identity}});
  Mlp online = target;
  online.mutable_layer(0).weights[0] = 1.0;
  soft_update(target, online, 0.001);
  CHECK(target.layer(0).weights[0] == doctest::Approx(0.001).epsilon(1e-12));

  Mlp t2 = target;
  soft_update(t2, online, 1.0);
  CHECK(t2.layer(0).weights[0] == 1.0);

  double gap = 1.0 - target.layer(0).weights[0];
  for (int n = 0; n < 100; ++n) {
    soft_update(target, online, 0.05);
    const double next = 1.0 - target.layer(0).weights[0];
    REQUIRE(next < gap);
    gap = next;
  }
  CHECK(gap == doctest::Approx(0.999 * std::pow(0.95, 100)).epsilon(1e-9));

  CHECK_THROWS(soft_update(target, online, 0.0));
  CHECK_THROWS(soft_update(target, online, 1.5));
  CHECK_THROWS(soft_update(target, Mlp({LayerSpec{2, 1}}), 0.5));
}

TEST_CASE("checkpoints round-trip exactly") {
  Rng rng(8);
  const Mlp net = Mlp::random(Mlp::chain(5, std::vector<std::size_t>{7, 4}, Activation::relu,
                                         LayerSpec{0, 3, Activation::sigmoid_scaled, 0.0, 1.0}),
                              rng);
  std::stringstream buf;
  save_checkpoint(net, buf);
  const Mlp back = load_checkpoint(buf);
  REQUIRE(back.same_shape(net));
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    CHECK(back.layer(l).weights == net.layer(l).weights);
    CHECK(back.layer(l).bias == net.layer(l).bias);
    CHECK(back.layer(l).spec == net.layer(l).spec);
  }
  std::stringstream bad("relaygame-mlp 99\n");
  CHECK_THROWS(load_checkpoint(bad));
}

TEST_CASE("initialisation is bounded by the fan-in rule") {
  Rng rng(9);
  const Mlp net = Mlp::random({LayerSpec{16, 8, Activation::relu}, LayerSpec{8, 2}}, rng);
  for (std::size_t l = 0; l < 2; ++l) {
    const double lim = 1.0 / std::sqrt(static_cast<double>(net.layer(l).spec.in_dim));
    for (double w : net.layer(l).weights) REQUIRE(std::abs(w) <= lim);
    for (double b : net.layer(l).bias) REQUIRE(std::abs(b) <= lim);
  }
}
