#include <immintrin.h>

#include <cmath>

#include "kernels_impl.hpp"

namespace relaygame::kernels {

namespace {

constexpr std::size_t kLanes = 4;

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// y += a * x over n elements.
inline void axpy(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 2 * kLanes <= n; i += 2 * kLanes) {
    __m256d y0 = _mm256_loadu_pd(y + i);
    __m256d y1 = _mm256_loadu_pd(y + i + kLanes);
    y0 = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), y0);
    y1 = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i + kLanes), y1);
    _mm256_storeu_pd(y + i, y0);
    _mm256_storeu_pd(y + i + kLanes, y1);
  }
  for (; i + kLanes <= n; i += kLanes) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 2 * kLanes <= n; i += 2 * kLanes) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + kLanes), _mm256_loadu_pd(b + i + kLanes), acc1);
  }
  for (; i + kLanes <= n; i += kLanes) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void affine_forward(const double* x, const double* w, const double* bias, double* y,
                    std::size_t batch, std::size_t in, std::size_t out) {
  const std::size_t in_vec = in - in % kLanes;
  for (std::size_t b = 0; b < batch; ++b) {
    const double* xb = x + b * in;
    double* yb = y + b * out;
    std::size_t o = 0;
    // Four output rows share each load of the input row.
    for (; o + 4 <= out; o += 4) {
      const double* w0 = w + o * in;
      const double* w1 = w0 + in;
      const double* w2 = w1 + in;
      const double* w3 = w2 + in;
      __m256d a0 = _mm256_setzero_pd();
      __m256d a1 = _mm256_setzero_pd();
      __m256d a2 = _mm256_setzero_pd();
      __m256d a3 = _mm256_setzero_pd();
      for (std::size_t i = 0; i < in_vec; i += kLanes) {
        const __m256d xv = _mm256_loadu_pd(xb + i);
        a0 = _mm256_fmadd_pd(xv, _mm256_loadu_pd(w0 + i), a0);
        a1 = _mm256_fmadd_pd(xv, _mm256_loadu_pd(w1 + i), a1);
        a2 = _mm256_fmadd_pd(xv, _mm256_loadu_pd(w2 + i), a2);
        a3 = _mm256_fmadd_pd(xv, _mm256_loadu_pd(w3 + i), a3);
      }
      double s0 = hsum(a0), s1 = hsum(a1), s2 = hsum(a2), s3 = hsum(a3);
      for (std::size_t i = in_vec; i < in; ++i) {
        s0 += xb[i] * w0[i];
        s1 += xb[i] * w1[i];
        s2 += xb[i] * w2[i];
        s3 += xb[i] * w3[i];
      }
      yb[o] = s0 + bias[o];
      yb[o + 1] = s1 + bias[o + 1];
      yb[o + 2] = s2 + bias[o + 2];
      yb[o + 3] = s3 + bias[o + 3];
    }
    for (; o < out; ++o) yb[o] = dot(xb, w + o * in, in) + bias[o];
  }
}

// dx = dy * W, four weight rows folded per pass over dx.
void affine_backward_input(const double* dy, const double* w, double* dx, std::size_t batch,
                           std::size_t in, std::size_t out) {
  for (std::size_t b = 0; b < batch; ++b) {
    double* dxb = dx + b * in;
    const double* dyb = dy + b * out;
    for (std::size_t i = 0; i < in; ++i) dxb[i] = 0.0;
    std::size_t o = 0;
    for (; o + 4 <= out; o += 4) {
      if (dyb[o] == 0.0 && dyb[o + 1] == 0.0 && dyb[o + 2] == 0.0 && dyb[o + 3] == 0.0) continue;
      const __m256d g0 = _mm256_set1_pd(dyb[o]);
      const __m256d g1 = _mm256_set1_pd(dyb[o + 1]);
      const __m256d g2 = _mm256_set1_pd(dyb[o + 2]);
      const __m256d g3 = _mm256_set1_pd(dyb[o + 3]);
      const double* w0 = w + o * in;
      const double* w1 = w0 + in;
      const double* w2 = w1 + in;
      const double* w3 = w2 + in;
      std::size_t i = 0;
      for (; i + kLanes <= in; i += kLanes) {
        __m256d acc = _mm256_loadu_pd(dxb + i);
        acc = _mm256_fmadd_pd(g0, _mm256_loadu_pd(w0 + i), acc);
        acc = _mm256_fmadd_pd(g1, _mm256_loadu_pd(w1 + i), acc);
        acc = _mm256_fmadd_pd(g2, _mm256_loadu_pd(w2 + i), acc);
        acc = _mm256_fmadd_pd(g3, _mm256_loadu_pd(w3 + i), acc);
        _mm256_storeu_pd(dxb + i, acc);
      }
      for (; i < in; ++i) {
        dxb[i] += dyb[o] * w0[i] + dyb[o + 1] * w1[i] + dyb[o + 2] * w2[i] + dyb[o + 3] * w3[i];
      }
    }
    for (; o < out; ++o) {
      if (dyb[o] != 0.0) axpy(dyb[o], w + o * in, dxb, in);
    }
  }
}

// dW += dy^T x, four batch rows folded per pass over each weight row.
void affine_backward_params(const double* dy, const double* x, double* dw, double* db,
                            std::size_t batch, std::size_t in, std::size_t out) {
  for (std::size_t o = 0; o < out; ++o) {
    double* dwo = dw + o * in;
    double bias_acc = 0.0;
    std::size_t b = 0;
    for (; b + 4 <= batch; b += 4) {
      const double c0 = dy[b * out + o];
      const double c1 = dy[(b + 1) * out + o];
      const double c2 = dy[(b + 2) * out + o];
      const double c3 = dy[(b + 3) * out + o];
      bias_acc += c0;
      bias_acc += c1;
      bias_acc += c2;
      bias_acc += c3;
      if (c0 == 0.0 && c1 == 0.0 && c2 == 0.0 && c3 == 0.0) continue;
      const __m256d g0 = _mm256_set1_pd(c0);
      const __m256d g1 = _mm256_set1_pd(c1);
      const __m256d g2 = _mm256_set1_pd(c2);
      const __m256d g3 = _mm256_set1_pd(c3);
      const double* x0 = x + b * in;
      const double* x1 = x0 + in;
      const double* x2 = x1 + in;
      const double* x3 = x2 + in;
      std::size_t i = 0;
      for (; i + kLanes <= in; i += kLanes) {
        __m256d acc = _mm256_loadu_pd(dwo + i);
        acc = _mm256_fmadd_pd(g0, _mm256_loadu_pd(x0 + i), acc);
        acc = _mm256_fmadd_pd(g1, _mm256_loadu_pd(x1 + i), acc);
        acc = _mm256_fmadd_pd(g2, _mm256_loadu_pd(x2 + i), acc);
        acc = _mm256_fmadd_pd(g3, _mm256_loadu_pd(x3 + i), acc);
        _mm256_storeu_pd(dwo + i, acc);
      }
      for (; i < in; ++i) dwo[i] += c0 * x0[i] + c1 * x1[i] + c2 * x2[i] + c3 * x3[i];
    }
    for (; b < batch; ++b) {
      const double g = dy[b * out + o];
      bias_acc += g;
      if (g != 0.0) axpy(g, x + b * in, dwo, in);
    }
    db[o] += bias_acc;
  }
}

// Elementwise kernels avoid FMA so they round exactly like the scalar table.
void rmsprop(double* param, const double* grad, double* acc, std::size_t n, double decay,
             double lr, double floor) {
  const double keep = 1.0 - decay;
  const __m256d vdecay = _mm256_set1_pd(decay);
  const __m256d vkeep = _mm256_set1_pd(keep);
  const __m256d vlr = _mm256_set1_pd(lr);
  const __m256d vfloor = _mm256_set1_pd(floor);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d g = _mm256_loadu_pd(grad + i);
    __m256d a = _mm256_add_pd(_mm256_mul_pd(vdecay, _mm256_loadu_pd(acc + i)),
                              _mm256_mul_pd(vkeep, _mm256_mul_pd(g, g)));
    _mm256_storeu_pd(acc + i, a);
    const __m256d step = _mm256_div_pd(_mm256_mul_pd(vlr, g), _mm256_sqrt_pd(_mm256_add_pd(a, vfloor)));
    _mm256_storeu_pd(param + i, _mm256_sub_pd(_mm256_loadu_pd(param + i), step));
  }
  for (; i < n; ++i) {
    const double g = grad[i];
    acc[i] = decay * acc[i] + keep * (g * g);
    param[i] -= lr * g / std::sqrt(acc[i] + floor);
  }
}

void soft_update(double* target, const double* online, std::size_t n, double tau) {
  const double keep = 1.0 - tau;
  const __m256d vtau = _mm256_set1_pd(tau);
  const __m256d vkeep = _mm256_set1_pd(keep);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d t = _mm256_add_pd(_mm256_mul_pd(vtau, _mm256_loadu_pd(online + i)),
                                    _mm256_mul_pd(vkeep, _mm256_loadu_pd(target + i)));
    _mm256_storeu_pd(target + i, t);
  }
  for (; i < n; ++i) target[i] = tau * online[i] + keep * target[i];
}

}  // namespace

const KernelTable& avx2_table_unchecked() {
  static const KernelTable table{
      "avx2", affine_forward, affine_backward_input, affine_backward_params,
      rmsprop, soft_update,   dot,
  };
  return table;
}

}  // namespace relaygame::kernels
