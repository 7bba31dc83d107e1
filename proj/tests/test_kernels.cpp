#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "relaygame/channel.hpp"
#include "relaygame/kernels.hpp"

using namespace relaygame;
namespace k = relaygame::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, Rng& rng, double zero_fraction = 0.0) {
  std::uniform_real_distribution<double> u(-1.0, 1.0), z(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = z(rng) < zero_fraction ? 0.0 : u(rng);
  return v;
}

void check_close(const std::vector<double>& a, const std::vector<double>& b, double tol) {
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    REQUIRE(std::abs(a[i] - b[i]) <= tol * (1.0 + std::abs(a[i])));
  }
}

const std::size_t kShapes[][3] = {{1, 1, 1}, {3, 5, 7}, {128, 13, 64}, {128, 64, 64}, {17, 64, 1},
                                  {9, 8, 4},  {2, 3, 9}, {128, 6, 64}, {5, 63, 65}};

}  // namespace

TEST_CASE("scalar table is always present and active honours availability") {
  CHECK(k::scalar_table().name == "scalar");
  const k::KernelTable& active = k::active();
  if (k::avx2_table() == nullptr) CHECK(active.name == "scalar");
}

TEST_CASE("avx2 kernels agree with the scalar reference") {
  const k::KernelTable* simd = k::avx2_table();
  if (simd == nullptr) {
    MESSAGE("AVX2/FMA not available on this machine; equivalence skipped");
    return;
  }
  const k::KernelTable& ref = k::scalar_table();
  Rng rng(2024);
  for (const auto& shape : kShapes) {
    const std::size_t batch = shape[0], in = shape[1], out = shape[2];
    CAPTURE(batch);
    CAPTURE(in);
    CAPTURE(out);
    const auto x = random_vec(batch * in, rng);
    const auto w = random_vec(out * in, rng);
    const auto bias = random_vec(out, rng);
    const auto dy = random_vec(batch * out, rng, 0.5);  // relu-like sparsity

    std::vector<double> y_ref(batch * out), y_simd(batch * out);
    ref.affine_forward(x.data(), w.data(), bias.data(), y_ref.data(), batch, in, out);
    simd->affine_forward(x.data(), w.data(), bias.data(), y_simd.data(), batch, in, out);
    check_close(y_ref, y_simd, 1e-12);

    std::vector<double> dx_ref(batch * in, 7.0), dx_simd(batch * in, -3.0);
    ref.affine_backward_input(dy.data(), w.data(), dx_ref.data(), batch, in, out);
    simd->affine_backward_input(dy.data(), w.data(), dx_simd.data(), batch, in, out);
    check_close(dx_ref, dx_simd, 1e-12);

    auto dw_ref = random_vec(out * in, rng);
    auto db_ref = random_vec(out, rng);
    auto dw_simd = dw_ref;
    auto db_simd = db_ref;
    ref.affine_backward_params(dy.data(), x.data(), dw_ref.data(), db_ref.data(), batch, in, out);
    simd->affine_backward_params(dy.data(), x.data(), dw_simd.data(), db_simd.data(), batch, in, out);
    check_close(dw_ref, dw_simd, 1e-12);
    check_close(db_ref, db_simd, 1e-12);

    const auto a = random_vec(in * 3 + 1, rng);
    const auto b = random_vec(in * 3 + 1, rng);
    CHECK(std::abs(ref.dot(a.data(), b.data(), a.size()) - simd->dot(a.data(), b.data(), a.size())) <= 1e-12);
  }
}

TEST_CASE("avx2 elementwise kernels are bit-identical to scalar") {
  const k::KernelTable* simd = k::avx2_table();
  if (simd == nullptr) return;
  const k::KernelTable& ref = k::scalar_table();
  Rng rng(77);
  for (std::size_t n : {1u, 3u, 4u, 5u, 64u, 4161u}) {
    const auto grad = random_vec(n, rng, 0.2);
    auto p_ref = random_vec(n, rng);
    std::vector<double> acc_ref(n);
    for (double& a : acc_ref) a = std::abs(std::uniform_real_distribution<double>(0, 1)(rng));
    auto p_simd = p_ref;
    auto acc_simd = acc_ref;
    for (int step = 0; step < 3; ++step) {
      ref.rmsprop(p_ref.data(), grad.data(), acc_ref.data(), n, 0.99, 1e-3, 1e-8);
      simd->rmsprop(p_simd.data(), grad.data(), acc_simd.data(), n, 0.99, 1e-3, 1e-8);
    }
    CHECK(p_ref == p_simd);
    CHECK(acc_ref == acc_simd);

    auto t_ref = random_vec(n, rng);
    auto t_simd = t_ref;
    const auto online = random_vec(n, rng);
    ref.soft_update(t_ref.data(), online.data(), n, 1e-3);
    simd->soft_update(t_simd.data(), online.data(), n, 1e-3);
    CHECK(t_ref == t_simd);
  }
}

TEST_CASE("scalar kernels by hand") {
  const k::KernelTable& t = k::scalar_table();
  // x = [1 2; 3 4], w = [1 0; 0 1; 1 1], bias = [0.5 0 -1]
  const double x[] = {1, 2, 3, 4};
  const double w[] = {1, 0, 0, 1, 1, 1};
  const double bias[] = {0.5, 0, -1};
  double y[6];
  t.affine_forward(x, w, bias, y, 2, 2, 3);
  CHECK(y[0] == 1.5);
  CHECK(y[1] == 2.0);
  CHECK(y[2] == 2.0);
  CHECK(y[3] == 3.5);
  CHECK(y[4] == 4.0);
  CHECK(y[5] == 6.0);

  const double dy[] = {1, 0, 2, 0, 1, 0};
  double dx[4];
  t.affine_backward_input(dy, w, dx, 2, 2, 3);
  CHECK(dx[0] == 3.0);
  CHECK(dx[1] == 2.0);
  CHECK(dx[2] == 0.0);
  CHECK(dx[3] == 1.0);

  double dw[6] = {}, db[3] = {};
  t.affine_backward_params(dy, x, dw, db, 2, 2, 3);
  CHECK(dw[0] == 1.0);
  CHECK(dw[1] == 2.0);
  CHECK(dw[2] == 3.0);
  CHECK(dw[3] == 4.0);
  CHECK(dw[4] == 2.0);
  CHECK(dw[5] == 4.0);
  CHECK(db[0] == 1.0);
  CHECK(db[1] == 1.0);
  CHECK(db[2] == 2.0);
}
