#pragma once

// Proportional prioritized replay over a fixed-capacity ring, backed by a
// sum tree (sampling) and a max tree (insertion priority).

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "relaygame/channel.hpp"
#include "relaygame/mlp.hpp"

namespace relaygame {

class EmptyBufferError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Experience {
  std::vector<double> state;
  std::vector<double> action;
  double reward = 0.0;
  std::vector<double> next_state;
  double priority = 1.0;
};

struct ReplayBatch {
  Matrix states;
  Matrix actions;
  Matrix next_states;
  std::vector<double> rewards;
  std::vector<double> weights;        // importance weights, batch max = 1
  std::vector<std::size_t> indices;   // slots for update_priorities
};

class SumTree {
 public:
  explicit SumTree(std::size_t capacity);

  void set(std::size_t i, double value);
  double get(std::size_t i) const { return sum_[leaves_ + i]; }
  double total() const { return sum_[1]; }
  double max() const { return max_[1]; }
  /// Smallest leaf index whose inclusive prefix sum exceeds `mass`.
  std::size_t find_prefix(double mass) const;
  std::size_t capacity() const { return capacity_; }

 private:
  std::size_t capacity_;
  std::size_t leaves_;
  std::vector<double> sum_;
  std::vector<double> max_;
};

class PrioritizedBuffer {
 public:
  PrioritizedBuffer(std::size_t capacity, std::size_t state_dim, std::size_t action_dim,
                    double kappa = 0.6, double epsilon = 1e-3);

  /// Stores a transition with the current maximum priority (1 when empty).
  /// The experience's own priority field is ignored.
  void add(const Experience& e);
  void add(std::span<const double> state, std::span<const double> action, double reward,
           std::span<const double> next_state);

  /// Stratified proportional sampling, P(i) = p_i / sum p. Importance weights
  /// (N P(i))^-kappa are divided by the batch maximum.
  ReplayBatch sample(std::size_t batch_size, Rng& rng) const;

  /// p_i <- |td_i| + epsilon.
  void update_priorities(std::span<const std::size_t> indices, std::span<const double> td_errors);

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t state_dim() const { return state_dim_; }
  std::size_t action_dim() const { return action_dim_; }
  double kappa() const { return kappa_; }
  double epsilon() const { return epsilon_; }
  double priority(std::size_t i) const { return tree_.get(i); }
  double total_priority() const { return tree_.total(); }
  Experience at(std::size_t i) const;

 private:
  std::size_t capacity_;
  std::size_t state_dim_;
  std::size_t action_dim_;
  double kappa_;
  double epsilon_;
  std::size_t size_ = 0;
  std::size_t next_ = 0;
  std::vector<double> states_;
  std::vector<double> actions_;
  std::vector<double> rewards_;
  std::vector<double> next_states_;
  SumTree tree_;
};

}  // namespace relaygame
