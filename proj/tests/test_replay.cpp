#include <doctest.h>

#include <cmath>
#include <vector>

#include "relaygame/replay.hpp"

using namespace relaygame;

namespace {

void add_scalar(PrioritizedBuffer& buf, double value) {
  const double s[] = {value};
  const double a[] = {value * 10.0};
  buf.add(s, a, value, s);
}

}  // namespace

TEST_CASE("sum tree prefix search") {
  SumTree t(5);
  const double p[] = {1.0, 0.0, 2.0, 3.0, 4.0};
  for (std::size_t i = 0; i < 5; ++i) t.set(i, p[i]);
  CHECK(t.total() == 10.0);
  CHECK(t.max() == 4.0);
  CHECK(t.find_prefix(0.5) == 0);
  CHECK(t.find_prefix(1.0) == 2);
  CHECK(t.find_prefix(2.999) == 2);
  CHECK(t.find_prefix(3.0) == 3);
  CHECK(t.find_prefix(9.99) == 4);
  t.set(4, 0.5);
  CHECK(t.max() == 3.0);
  CHECK(t.total() == 6.5);
}

TEST_CASE("empty buffer cannot be sampled") {
  PrioritizedBuffer buf(4, 1, 1);
  Rng rng(1);
  CHECK_THROWS_AS(buf.sample(2, rng), EmptyBufferError);
}

TEST_CASE("capacity is never exceeded and the ring overwrites oldest") {
  PrioritizedBuffer buf(3, 1, 1);
  for (int i = 0; i < 7; ++i) {
    add_scalar(buf, i);
    REQUIRE(buf.size() <= 3);
  }
  CHECK(buf.size() == 3);
  std::vector<double> seen;
  for (std::size_t i = 0; i < 3; ++i) seen.push_back(buf.at(i).reward);
  std::sort(seen.begin(), seen.end());
  CHECK(seen == std::vector<double>{4.0, 5.0, 6.0});
}

TEST_CASE("stored transitions round-trip") {
  PrioritizedBuffer buf(4, 2, 3);
  Experience e{{1.0, 2.0}, {0.1, 0.2, 0.3}, -0.5, {3.0, 4.0}, 99.0};
  buf.add(e);
  const Experience back = buf.at(0);
  CHECK(back.state == e.state);
  CHECK(back.action == e.action);
  CHECK(back.reward == e.reward);
  CHECK(back.next_state == e.next_state);
  CHECK(back.priority == 1.0);  // insertion ignores the caller's priority
  CHECK_THROWS(buf.add(std::vector<double>{1.0}, std::vector<double>{0.0, 0.0, 0.0}, 0.0,
                       std::vector<double>{1.0, 2.0}));
}

TEST_CASE("uniform priorities give unit weights") {
  PrioritizedBuffer buf(64, 1, 1, 0.6);
  for (int i = 0; i < 50; ++i) add_scalar(buf, i);
  Rng rng(2);
  const ReplayBatch b = buf.sample(32, rng);
  for (double w : b.weights) CHECK(w == doctest::Approx(1.0));
  for (std::size_t idx : b.indices) CHECK(idx < buf.size());
  CHECK(b.states.rows == 32);
}

TEST_CASE("kappa = 0 gives unit weights for any priorities") {
  PrioritizedBuffer buf(16, 1, 1, 0.0);
  for (int i = 0; i < 10; ++i) add_scalar(buf, i);
  std::vector<std::size_t> idx{0, 1, 2, 3};
  std::vector<double> td{0.1, 5.0, -2.0, 0.0};
  buf.update_priorities(idx, td);
  Rng rng(3);
  const ReplayBatch b = buf.sample(16, rng);
  for (double w : b.weights) CHECK(w == 1.0);
}

TEST_CASE("priorities follow |delta| + epsilon and new items get the max") {
  PrioritizedBuffer buf(8, 1, 1, 0.6, 1e-3);
  add_scalar(buf, 0);
  add_scalar(buf, 1);
  std::vector<std::size_t> idx{0, 1};
  std::vector<double> td{-2.5, 0.0};
  buf.update_priorities(idx, td);
  CHECK(buf.priority(0) == doctest::Approx(2.501));
  CHECK(buf.priority(1) == doctest::Approx(1e-3));
  add_scalar(buf, 2);
  CHECK(buf.priority(2) == doctest::Approx(2.501));
  for (std::size_t i = 0; i < buf.size(); ++i) CHECK(buf.priority(i) > 0.0);
}

TEST_CASE("sampling frequency is proportional to priority") {
  PrioritizedBuffer buf(2, 1, 1, 0.6, 1e-12);
  add_scalar(buf, 0);
  add_scalar(buf, 1);
  std::vector<std::size_t> idx{0, 1};
  std::vector<double> td{1.0, 3.0};
  buf.update_priorities(idx, td);
  Rng rng(4);
  long count[2] = {0, 0};
  const int draws = 100000;
  for (int i = 0; i < draws / 100; ++i) {
    const ReplayBatch b = buf.sample(100, rng);
    for (std::size_t j : b.indices) ++count[j];
  }
  const double ratio = static_cast<double>(count[1]) / static_cast<double>(count[0]);
  CHECK(ratio == doctest::Approx(3.0).epsilon(0.02));
  CHECK(count[0] + count[1] == draws);
}

TEST_CASE("importance weights use the negative exponent normalised by the batch max") {
  PrioritizedBuffer buf(2, 1, 1, 0.5, 1e-12);
  add_scalar(buf, 0);
  add_scalar(buf, 1);
  std::vector<std::size_t> idx{0, 1};
  std::vector<double> td{1.0, 4.0};
  buf.update_priorities(idx, td);
  Rng rng(5);
  const ReplayBatch b = buf.sample(64, rng);
  bool saw0 = false, saw1 = false;
  for (std::size_t j = 0; j < b.indices.size(); ++j) {
    // P = (0.2, 0.8); (N P)^-0.5 = (1.581, 0.791); max-normalised = (1, 0.5).
    if (b.indices[j] == 0) {
      saw0 = true;
      CHECK(b.weights[j] == doctest::Approx(1.0));
    } else {
      saw1 = true;
      CHECK(b.weights[j] == doctest::Approx(0.5));
    }
  }
  CHECK(saw0);
  CHECK(saw1);
}
