#include "relaygame/replay.hpp"

#include <algorithm>
#include <cmath>

namespace relaygame {

SumTree::SumTree(std::size_t capacity) : capacity_(capacity), leaves_(1) {
  if (capacity == 0) throw std::invalid_argument("SumTree: capacity must be >= 1");
  while (leaves_ < capacity) leaves_ <<= 1;
  sum_.assign(2 * leaves_, 0.0);
  max_.assign(2 * leaves_, 0.0);
}

void SumTree::set(std::size_t i, double value) {
  std::size_t node = leaves_ + i;
  sum_[node] = value;
  max_[node] = value;
  // Recompute parents from children so sums never accumulate drift.
  for (node >>= 1; node >= 1; node >>= 1) {
    sum_[node] = sum_[2 * node] + sum_[2 * node + 1];
    max_[node] = std::max(max_[2 * node], max_[2 * node + 1]);
  }
}

std::size_t SumTree::find_prefix(double mass) const {
  std::size_t node = 1;
  while (node < leaves_) {
    const std::size_t left = 2 * node;
    if (mass < sum_[left]) {
      node = left;
    } else {
      mass -= sum_[left];
      node = left + 1;
    }
  }
  return node - leaves_;
}

PrioritizedBuffer::PrioritizedBuffer(std::size_t capacity, std::size_t state_dim,
                                     std::size_t action_dim, double kappa, double epsilon)
    : capacity_(capacity),
      state_dim_(state_dim),
      action_dim_(action_dim),
      kappa_(kappa),
      epsilon_(epsilon),
      states_(capacity * state_dim),
      actions_(capacity * action_dim),
      rewards_(capacity),
      next_states_(capacity * state_dim),
      tree_(capacity) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("PrioritizedBuffer: epsilon must be > 0");
  if (!(kappa >= 0.0)) throw std::invalid_argument("PrioritizedBuffer: kappa must be >= 0");
}

void PrioritizedBuffer::add(const Experience& e) { add(e.state, e.action, e.reward, e.next_state); }

void PrioritizedBuffer::add(std::span<const double> state, std::span<const double> action,
                            double reward, std::span<const double> next_state) {
  if (state.size() != state_dim_ || next_state.size() != state_dim_ ||
      action.size() != action_dim_) {
    throw std::invalid_argument("PrioritizedBuffer::add: dimension mismatch");
  }
  const std::size_t slot = next_;
  std::copy(state.begin(), state.end(), states_.begin() + slot * state_dim_);
  std::copy(action.begin(), action.end(), actions_.begin() + slot * action_dim_);
  std::copy(next_state.begin(), next_state.end(), next_states_.begin() + slot * state_dim_);
  rewards_[slot] = reward;
  const double p = size_ == 0 ? 1.0 : tree_.max();
  tree_.set(slot, p);
  next_ = (next_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
}

ReplayBatch PrioritizedBuffer::sample(std::size_t batch_size, Rng& rng) const {
  if (size_ == 0) throw EmptyBufferError("PrioritizedBuffer::sample: buffer is empty");
  if (batch_size == 0) throw std::invalid_argument("PrioritizedBuffer::sample: batch_size must be >= 1");
  ReplayBatch batch;
  batch.states.resize(batch_size, state_dim_);
  batch.actions.resize(batch_size, action_dim_);
  batch.next_states.resize(batch_size, state_dim_);
  batch.rewards.resize(batch_size);
  batch.weights.resize(batch_size);
  batch.indices.resize(batch_size);

  const double total = tree_.total();
  const double segment = total / static_cast<double>(batch_size);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double n = static_cast<double>(size_);
  double max_weight = 0.0;
  for (std::size_t j = 0; j < batch_size; ++j) {
    const double mass = segment * (static_cast<double>(j) + unit(rng));
    std::size_t i = tree_.find_prefix(std::min(mass, std::nextafter(total, 0.0)));
    // Rounding at the right edge can land on an unfilled leaf.
    if (i >= size_ || tree_.get(i) <= 0.0) i = size_ - 1;
    batch.indices[j] = i;
    std::copy_n(states_.begin() + i * state_dim_, state_dim_, batch.states.row(j).begin());
    std::copy_n(actions_.begin() + i * action_dim_, action_dim_, batch.actions.row(j).begin());
    std::copy_n(next_states_.begin() + i * state_dim_, state_dim_, batch.next_states.row(j).begin());
    batch.rewards[j] = rewards_[i];
    const double prob = tree_.get(i) / total;
    batch.weights[j] = std::pow(n * prob, -kappa_);
    max_weight = std::max(max_weight, batch.weights[j]);
  }
  for (double& w : batch.weights) w /= max_weight;
  return batch;
}

void PrioritizedBuffer::update_priorities(std::span<const std::size_t> indices,
                                          std::span<const double> td_errors) {
  if (indices.size() != td_errors.size()) {
    throw std::invalid_argument("update_priorities: size mismatch");
  }
  for (std::size_t j = 0; j < indices.size(); ++j) {
    if (indices[j] >= size_) throw std::out_of_range("update_priorities: index out of range");
    tree_.set(indices[j], std::abs(td_errors[j]) + epsilon_);
  }
}

Experience PrioritizedBuffer::at(std::size_t i) const {
  if (i >= size_) throw std::out_of_range("PrioritizedBuffer::at");
  Experience e;
  e.state.assign(states_.begin() + i * state_dim_, states_.begin() + (i + 1) * state_dim_);
  e.action.assign(actions_.begin() + i * action_dim_, actions_.begin() + (i + 1) * action_dim_);
  e.next_state.assign(next_states_.begin() + i * state_dim_,
                      next_states_.begin() + (i + 1) * state_dim_);
  e.reward = rewards_[i];
  e.priority = tree_.get(i);
  return e;
}

}  // namespace relaygame
