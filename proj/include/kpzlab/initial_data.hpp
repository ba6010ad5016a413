#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "kpzlab/rng.hpp"
#include "kpzlab/torus.hpp"

namespace kpz {

/// Continuous height profile on the torus, pinned to h0(0) = 0.
struct TargetProfile {
    std::string name;
    std::function<double(double)> eval;

    double operator()(double x) const { return eval(x); }
    /// Samples at x_j = j/M.
    GridField sample(std::size_t m) const;
    /// Fourier coefficients up to |k| <= n from a dense sample table.
    SpectralField coefficients(int n) const;
};

/// "zero", "sine", "triangle", "weierstrass".
const std::vector<std::string>& target_battery();
TargetProfile target_by_name(std::string_view name);

/// Mode scale of the bridge: |k|^-1 or (2 pi |k|)^-1. The second one makes
/// the derivative a projected white noise with unit variance per mode.
enum class BridgeNormalization { unit_modes, white_noise };

std::string to_string(BridgeNormalization n);
BridgeNormalization bridge_normalization_from_string(std::string_view s);

/// Brownian bridge on the torus truncated at K modes, shifted so b(0) = 0.
SpectralField sample_bridge(int k, RngStream& rng,
                            BridgeNormalization normalization = BridgeNormalization::unit_modes);

struct ConditionedBridgeConfig {
    double eps = 0.5;
    TargetProfile target;
    int bridge_cutoff = 16;
    long max_attempts = 1000000;
    BridgeNormalization normalization = BridgeNormalization::white_noise;
    /// Tube membership is checked on check_factor * K grid points.
    int check_factor = 8;

    void validate() const;
};

struct ConditionedSample {
    SpectralField bridge;
    long attempts = 0;
    double acceptance_rate() const { return attempts > 0 ? 1.0 / static_cast<double>(attempts) : 0.0; }
};

class TubeTooUnlikely : public std::runtime_error {
public:
    TubeTooUnlikely(const std::string& what, long attempts, double acceptance_estimate)
        : std::runtime_error(what), attempts_(attempts), estimate_(acceptance_estimate) {}
    long attempts() const { return attempts_; }
    /// Empirical acceptance (0 when nothing was accepted).
    double acceptance_estimate() const { return estimate_; }

private:
    long attempts_;
    double estimate_;
};

/// Rejection sampler: first bridge with sup |b - h0| <= eps on the check grid.
ConditionedSample sample_conditioned_bridge(const ConditionedBridgeConfig& cfg, RngStream& rng);

/// Fraction of `draws` unconditioned bridges that land in the tube.
double estimate_acceptance(const ConditionedBridgeConfig& cfg, long draws, RngStream& rng);

/// sup_x |b(x) - h0(x)| over the check grid of cfg.
double tube_distance(const ConditionedBridgeConfig& cfg, const SpectralField& bridge);

struct DecompositionPair {
    SpectralField h1_init;  ///< P_N bridge
    SpectralField h2_init;  ///< P_N h0 - P_N bridge
};

DecompositionPair decompose_initial(const TargetProfile& target, const SpectralField& bridge, int n);

/// max_j |f_j - g_j|.
double uniform_distance(const GridField& f, const GridField& g);

}  // namespace kpz
