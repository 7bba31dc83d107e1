#include "relaygame/channel.hpp"

#include <cmath>
#include <string>

namespace relaygame {

namespace {

void require_positive(const std::vector<double>& values, int k, const char* name) {
  if (static_cast<int>(values.size()) != k) {
    throw ConfigError(std::string(name) + ": expected " + std::to_string(k) + " entries, got " +
                      std::to_string(values.size()));
  }
  for (double v : values) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ConfigError(std::string(name) + ": variances must be finite and > 0");
    }
  }
}

}  // namespace

void ChannelParams::validate() const {
  if (num_relays < 1) throw ConfigError("num_relays must be >= 1");
  if (!(rho >= 0.0 && rho <= 1.0)) throw ConfigError("rho must lie in [0, 1]");
  require_positive(var_sk, num_relays, "var_sk");
  require_positive(var_kd, num_relays, "var_kd");
  require_positive(noise_relay, num_relays, "noise_relay");
  if (!(noise_dest > 0.0) || !std::isfinite(noise_dest)) {
    throw ConfigError("noise_dest must be finite and > 0");
  }
}

ChannelParams ChannelParams::uniform(int num_relays, double rho, double link_var, double noise) {
  ChannelParams p;
  p.num_relays = num_relays;
  p.rho = rho;
  const auto n = static_cast<std::size_t>(num_relays > 0 ? num_relays : 0);
  p.var_sk.assign(n, link_var);
  p.var_kd.assign(n, link_var);
  p.noise_relay.assign(n, noise);
  p.noise_dest = noise;
  return p;
}

ComplexGain draw_complex_gaussian(double variance, Rng& rng) {
  std::normal_distribution<double> normal(0.0, std::sqrt(variance / 2.0));
  ComplexGain g;
  g.re = normal(rng);
  g.im = normal(rng);
  return g;
}

ChannelState init_channels(const ChannelParams& params, Rng& rng) {
  params.validate();
  ChannelState state;
  state.h_sk.reserve(params.var_sk.size());
  state.h_kd.reserve(params.var_kd.size());
  for (int k = 0; k < params.num_relays; ++k) {
    state.h_sk.push_back(draw_complex_gaussian(params.var_sk[k], rng));
    state.h_kd.push_back(draw_complex_gaussian(params.var_kd[k], rng));
  }
  state.slot_index = 0;
  return state;
}

ChannelState init_channels(const ChannelParams& params, std::uint64_t seed) {
  Rng rng(seed);
  return init_channels(params, rng);
}

ChannelState step_channels(const ChannelState& state, const ChannelParams& params, Rng& rng) {
  if (state.num_relays() != params.num_relays ||
      state.h_kd.size() != state.h_sk.size()) {
    throw std::invalid_argument("step_channels: state does not match params");
  }
  const double rho = params.rho;
  const double innovation = std::sqrt(1.0 - rho * rho);
  ChannelState next;
  next.h_sk.resize(state.h_sk.size());
  next.h_kd.resize(state.h_kd.size());
  auto evolve = [&](const ComplexGain& h, double variance) {
    const ComplexGain z = draw_complex_gaussian(variance, rng);
    return ComplexGain{rho * h.re + innovation * z.re, rho * h.im + innovation * z.im};
  };
  // Draw order is part of the determinism contract: relay-major, sk before kd.
  for (int k = 0; k < params.num_relays; ++k) {
    next.h_sk[k] = evolve(state.h_sk[k], params.var_sk[k]);
    next.h_kd[k] = evolve(state.h_kd[k], params.var_kd[k]);
  }
  next.slot_index = state.slot_index + 1;
  return next;
}

bool try_link_quantities(const ChannelState& state, int k, double p_s,
                         const ChannelParams& params, LinkQuantities& out) {
  const double sk = state.h_sk.at(k).power();
  const double kd = state.h_kd.at(k).power();
  if (kd < kDegenerateLinkFloor) return false;
  const double noise_k = params.noise_relay[k];
  out.gamma_sk = p_s * sk / noise_k;
  out.g_k = params.noise_dest * (p_s * sk + noise_k) / (noise_k * kd);
  return true;
}

LinkQuantities link_quantities(const ChannelState& state, int k, double p_s,
                               const ChannelParams& params) {
  LinkQuantities lq;
  if (!try_link_quantities(state, k, p_s, params, lq)) {
    throw DegenerateLinkError("relay " + std::to_string(k) + ": |h_kd|^2 below floor");
  }
  return lq;
}

double end_to_end_snr(double p_s, double p_k, const ChannelState& state, int k,
                      const ChannelParams& params) {
  const double sk = state.h_sk.at(k).power();
  const double kd = state.h_kd.at(k).power();
  const double noise_k = params.noise_relay[k];
  const double num = p_s * p_k * sk * kd;
  const double den = p_k * kd * noise_k + params.noise_dest * (p_s * sk + noise_k);
  return num / den;
}

double channel_capacity(double p_k, const LinkQuantities& lq) {
  if (p_k <= 0.0) return 0.0;
  return 0.5 * std::log2(1.0 + p_k * lq.gamma_sk / (p_k + lq.g_k));
}

}  // namespace relaygame
