#pragma once

// Dense arithmetic kernels behind the MLP. A scalar reference table is always
// available; an AVX2+FMA table is compiled on x86-64 and chosen at runtime
// when the CPU supports it. Row-major layouts throughout:
//   x: batch x in, w: out x in, y: batch x out.

#include <cstddef>
#include <string_view>

namespace relaygame::kernels {

struct KernelTable {
  std::string_view name;

  // y = x * w^T + bias (broadcast over batch rows)
  void (*affine_forward)(const double* x, const double* w, const double* bias, double* y,
                         std::size_t batch, std::size_t in, std::size_t out);
  // dx = dy * w (overwrites dx)
  void (*affine_backward_input)(const double* dy, const double* w, double* dx,
                                std::size_t batch, std::size_t in, std::size_t out);
  // dw += dy^T * x, db += column sums of dy
  void (*affine_backward_params)(const double* dy, const double* x, double* dw, double* db,
                                 std::size_t batch, std::size_t in, std::size_t out);
  // acc = decay*acc + (1-decay)*g^2; p -= lr * g / sqrt(acc + floor)
  void (*rmsprop)(double* param, const double* grad, double* acc, std::size_t n, double decay,
                  double lr, double floor);
  // target = tau*online + (1-tau)*target
  void (*soft_update)(double* target, const double* online, std::size_t n, double tau);
  double (*dot)(const double* a, const double* b, std::size_t n);
};

const KernelTable& scalar_table();

/// nullptr when AVX2/FMA is not compiled in or not supported by this CPU.
const KernelTable* avx2_table();

/// Table used by the library. AVX2 when available unless the environment
/// variable RELAYGAME_KERNELS=scalar is set at first use.
const KernelTable& active();

}  // namespace relaygame::kernels
