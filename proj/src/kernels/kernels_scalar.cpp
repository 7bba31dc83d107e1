#include <cmath>

#include "kernels_impl.hpp"

namespace relaygame::kernels {

namespace {

void affine_forward(const double* x, const double* w, const double* bias, double* y,
                    std::size_t batch, std::size_t in, std::size_t out) {
  for (std::size_t b = 0; b < batch; ++b) {
    const double* xb = x + b * in;
    double* yb = y + b * out;
    for (std::size_t o = 0; o < out; ++o) {
      const double* wo = w + o * in;
      double acc = 0.0;
      for (std::size_t i = 0; i < in; ++i) acc += xb[i] * wo[i];
      yb[o] = acc + bias[o];
    }
  }
}

void affine_backward_input(const double* dy, const double* w, double* dx, std::size_t batch,
                           std::size_t in, std::size_t out) {
  for (std::size_t b = 0; b < batch; ++b) {
    double* dxb = dx + b * in;
    for (std::size_t i = 0; i < in; ++i) dxb[i] = 0.0;
    for (std::size_t o = 0; o < out; ++o) {
      const double g = dy[b * out + o];
      if (g == 0.0) continue;  // relu-masked units are common
      const double* wo = w + o * in;
      for (std::size_t i = 0; i < in; ++i) dxb[i] += g * wo[i];
    }
  }
}

void affine_backward_params(const double* dy, const double* x, double* dw, double* db,
                            std::size_t batch, std::size_t in, std::size_t out) {
  for (std::size_t o = 0; o < out; ++o) {
    double* dwo = dw + o * in;
    double bias_acc = 0.0;
    for (std::size_t b = 0; b < batch; ++b) {
      const double g = dy[b * out + o];
      bias_acc += g;
      if (g == 0.0) continue;
      const double* xb = x + b * in;
      for (std::size_t i = 0; i < in; ++i) dwo[i] += g * xb[i];
    }
    db[o] += bias_acc;
  }
}

void rmsprop(double* param, const double* grad, double* acc, std::size_t n, double decay,
             double lr, double floor) {
  const double keep = 1.0 - decay;
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grad[i];
    acc[i] = decay * acc[i] + keep * (g * g);
    param[i] -= lr * g / std::sqrt(acc[i] + floor);
  }
}

void soft_update(double* target, const double* online, std::size_t n, double tau) {
  const double keep = 1.0 - tau;
  for (std::size_t i = 0; i < n; ++i) target[i] = tau * online[i] + keep * target[i];
}

double dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{
      "scalar", affine_forward, affine_backward_input, affine_backward_params,
      rmsprop,  soft_update,    dot,
  };
  return table;
}

}  // namespace relaygame::kernels
