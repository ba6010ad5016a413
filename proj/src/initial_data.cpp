#include "kpzlab/initial_data.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace kpz {

GridField TargetProfile::sample(std::size_t m) const {
    GridField g(m);
    for (std::size_t j = 0; j < m; ++j) g.values[j] = eval(static_cast<double>(j) / static_cast<double>(m));
    return g;
}

SpectralField TargetProfile::coefficients(int n) const {
    if (n < 0) throw std::invalid_argument("TargetProfile::coefficients: negative cutoff");
    const std::size_t m = fft_friendly_size(static_cast<std::size_t>(std::max(4096, 16 * n)));
    return from_grid(sample(m), n, false);
}

const std::vector<std::string>& target_battery() {
    static const std::vector<std::string> names{"zero", "sine", "triangle", "weierstrass"};
    return names;
}

TargetProfile target_by_name(std::string_view name) {
    if (name == "zero") return {"zero", [](double) { return 0.0; }};
    if (name == "sine") return {"sine", [](double x) { return 0.3 * std::sin(kTwoPi * x); }};
    if (name == "triangle")
        return {"triangle", [](double x) { return 0.3 * (2.0 / kPi) * std::asin(std::sin(kTwoPi * x)); }};
    if (name == "weierstrass") {
        // Hoelder-1/2 partial sum, six octaves, sup bounded by 0.2.
        constexpr int octaves = 6;
        double total = 0.0;
        for (int j = 0; j < octaves; ++j) total += std::pow(2.0, -0.5 * j);
        const double a = 0.2 / total;
        return {"weierstrass", [a](double x) {
                    double s = 0.0;
                    for (int j = 0; j < octaves; ++j) s += std::pow(2.0, -0.5 * j) * std::sin(kTwoPi * std::ldexp(1.0, j) * x);
                    return a * s;
                }};
    }
    throw std::invalid_argument("unknown target profile: " + std::string(name));
}

std::string to_string(BridgeNormalization n) {
    return n == BridgeNormalization::unit_modes ? "unit_modes" : "white_noise";
}

BridgeNormalization bridge_normalization_from_string(std::string_view s) {
    if (s == "unit_modes") return BridgeNormalization::unit_modes;
    if (s == "white_noise") return BridgeNormalization::white_noise;
    throw std::invalid_argument("unknown bridge normalization: " + std::string(s));
}

namespace {

void fill_bridge(SpectralField& b, RngStream& rng, BridgeNormalization normalization) {
    auto modes = b.mutable_modes();
    const double sd = std::sqrt(0.5);
    double at_origin = 0.0;
    for (std::size_t k = 1; k < modes.size(); ++k) {
        const double wave = normalization == BridgeNormalization::unit_modes ? 1.0 : kTwoPi;
        const double scale = sd / (wave * static_cast<double>(k));
        const double re = rng.normal();
        const double im = rng.normal();
        modes[k] = Complex{scale * re, scale * im};
        at_origin += 2.0 * modes[k].real();
    }
    modes[0] = Complex{-at_origin, 0.0};
}

}  // namespace

SpectralField sample_bridge(int k, RngStream& rng, BridgeNormalization normalization) {
    if (k < 1) throw std::invalid_argument("sample_bridge: K must be >= 1");
    SpectralField b(k, false);
    fill_bridge(b, rng, normalization);
    return b;
}

void ConditionedBridgeConfig::validate() const {
    if (!(eps > 0.0)) throw std::invalid_argument("tube half-width eps must be positive");
    if (bridge_cutoff < 1) throw std::invalid_argument("bridge cutoff must be >= 1");
    if (max_attempts < 1) throw std::invalid_argument("max_attempts must be >= 1");
    if (check_factor < 8) throw std::invalid_argument("tube check grid needs >= 8K points");
    if (!target.eval) throw std::invalid_argument("conditioned bridge needs a target profile");
}

namespace {

class TubeChecker {
public:
    explicit TubeChecker(const ConditionedBridgeConfig& cfg)
        : eps_(cfg.eps),
          grid_(static_cast<std::size_t>(cfg.check_factor) * static_cast<std::size_t>(cfg.bridge_cutoff)),
          target_(cfg.target.sample(grid_.size()).values),
          values_(grid_.size()) {}

    double distance(const SpectralField& b) {
        grid_.to_grid(b.modes(), values_);
        double worst = 0.0;
        for (std::size_t j = 0; j < values_.size(); ++j) worst = std::max(worst, std::abs(values_[j] - target_[j]));
        return worst;
    }

    bool inside(const SpectralField& b) {
        grid_.to_grid(b.modes(), values_);
        for (std::size_t j = 0; j < values_.size(); ++j)
            if (std::abs(values_[j] - target_[j]) > eps_) return false;
        return true;
    }

private:
    double eps_;
    GridTransform grid_;
    std::vector<double> target_;
    std::vector<double> values_;
};

}  // namespace

ConditionedSample sample_conditioned_bridge(const ConditionedBridgeConfig& cfg, RngStream& rng) {
    cfg.validate();
    TubeChecker tube(cfg);
    SpectralField b(cfg.bridge_cutoff, false);
    for (long attempt = 1; attempt <= cfg.max_attempts; ++attempt) {
        fill_bridge(b, rng, cfg.normalization);
        if (tube.inside(b)) return {b, attempt};
    }
    throw TubeTooUnlikely("tube too unlikely: no bridge within eps = " + std::to_string(cfg.eps) + " of target '" +
                              cfg.target.name + "' in " + std::to_string(cfg.max_attempts) + " attempts",
                          cfg.max_attempts, 0.0);
}

double estimate_acceptance(const ConditionedBridgeConfig& cfg, long draws, RngStream& rng) {
    cfg.validate();
    if (draws < 1) throw std::invalid_argument("estimate_acceptance: draws must be >= 1");
    TubeChecker tube(cfg);
    SpectralField b(cfg.bridge_cutoff, false);
    long hits = 0;
    for (long i = 0; i < draws; ++i) {
        fill_bridge(b, rng, cfg.normalization);
        if (tube.inside(b)) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(draws);
}

double tube_distance(const ConditionedBridgeConfig& cfg, const SpectralField& bridge) {
    cfg.validate();
    if (bridge.cutoff() > cfg.bridge_cutoff) throw std::invalid_argument("tube_distance: bridge exceeds K");
    TubeChecker tube(cfg);
    return tube.distance(with_cutoff(bridge, cfg.bridge_cutoff));
}

DecompositionPair decompose_initial(const TargetProfile& target, const SpectralField& bridge, int n) {
    if (n < 0) throw std::invalid_argument("decompose_initial: negative cutoff");
    DecompositionPair out;
    out.h1_init = with_cutoff(bridge, n);
    out.h1_init.set_zero_mean(false);
    out.h2_init = target.coefficients(n) - out.h1_init;
    return out;
}

double uniform_distance(const GridField& f, const GridField& g) {
    if (f.size() != g.size()) throw std::invalid_argument("uniform_distance: grid size mismatch");
    double worst = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j) worst = std::max(worst, std::abs(f.values[j] - g.values[j]));
    return worst;
}

}  // namespace kpz
