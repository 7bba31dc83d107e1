#pragma once

// Two-hop amplify-and-forward relay channel: Gauss-Markov block fading,
// per-link quantities, end-to-end SNR and capacity.

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace relaygame {

using Rng = std::mt19937_64;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateLinkError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ComplexGain {
  double re = 0.0;
  double im = 0.0;

  double power() const { return re * re + im * im; }
  friend bool operator==(const ComplexGain&, const ComplexGain&) = default;
};

struct ChannelParams {
  int num_relays = 4;
  double rho = 0.8;
  std::vector<double> var_sk;       // sigma_sk^2 per relay
  std::vector<double> var_kd;       // sigma_kd^2 per relay
  std::vector<double> noise_relay;  // sigma_k^2 per relay
  double noise_dest = 0.1;          // sigma_d^2

  /// Throws ConfigError on any invariant violation.
  void validate() const;

  /// K relays with identical link variances and noise powers.
  static ChannelParams uniform(int num_relays, double rho, double link_var, double noise);

  /// Reference environment: K=4, unit-variance links, noise 0.1, rho=0.8.
  static ChannelParams reference() { return uniform(4, 0.8, 1.0, 0.1); }
};

struct ChannelState {
  std::vector<ComplexGain> h_sk;
  std::vector<ComplexGain> h_kd;
  std::uint64_t slot_index = 0;

  int num_relays() const { return static_cast<int>(h_sk.size()); }
  friend bool operator==(const ChannelState&, const ChannelState&) = default;
};

struct LinkQuantities {
  double gamma_sk = 0.0;  // received SNR at the relay
  double g_k = 0.0;       // composite noise/channel factor
};

/// Squared-magnitude floor on |h_kd|^2 below which a relay is unusable.
inline constexpr double kDegenerateLinkFloor = 1e-12;

/// Circularly symmetric complex Gaussian with total variance `variance`.
ComplexGain draw_complex_gaussian(double variance, Rng& rng);

ChannelState init_channels(const ChannelParams& params, Rng& rng);
ChannelState init_channels(const ChannelParams& params, std::uint64_t seed);

/// One AR(1) step: h <- rho*h + sqrt(1-rho^2)*zeta, zeta ~ CN(0, link variance).
ChannelState step_channels(const ChannelState& state, const ChannelParams& params, Rng& rng);

/// Throws DegenerateLinkError when |h_kd|^2 < kDegenerateLinkFloor.
LinkQuantities link_quantities(const ChannelState& state, int k, double p_s,
                               const ChannelParams& params);

/// Non-throwing variant; false when relay k is degenerate.
bool try_link_quantities(const ChannelState& state, int k, double p_s,
                         const ChannelParams& params, LinkQuantities& out);

double end_to_end_snr(double p_s, double p_k, const ChannelState& state, int k,
                      const ChannelParams& params);

/// 0.5 * log2(1 + p_k*gamma_sk / (p_k + G_k)), in bits/s/Hz.
double channel_capacity(double p_k, const LinkQuantities& lq);

}  // namespace relaygame
