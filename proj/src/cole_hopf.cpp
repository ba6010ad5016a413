#include "kpzlab/cole_hopf.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace kpz {

std::size_t she_grid_size(int n, double dt, int oversample) {
    if (n < 0 || !(dt > 0.0)) throw std::invalid_argument("she_grid_size: need n >= 0 and dt > 0");
    if (oversample < 1) throw std::invalid_argument("she_grid_size: oversample must be >= 1");
    // exp(-(pi M)^2 dt) < 1e-16
    const double needed = std::sqrt(16.0 * std::log(10.0) / dt) / kPi;
    const auto floor_size = static_cast<std::size_t>(oversample) * static_cast<std::size_t>(2 * n + 1);
    return fft_friendly_size(std::max(floor_size, static_cast<std::size_t>(std::ceil(needed))));
}

SheStepper::SheStepper(std::size_t grid_size, double dt) : dt_(dt), grid_(grid_size), noise_(grid_size) {
    if (!(dt > 0.0)) throw std::invalid_argument("SheStepper: dt must be positive");
    decay_.resize(grid_size / 2 + 1);
    for (std::size_t k = 0; k < decay_.size(); ++k) {
        const double wave = kTwoPi * static_cast<double>(k);
        decay_[k] = std::exp(-wave * wave * dt);
    }
}

void SheStepper::heat(SheState& s) {
    if (s.z.size() != grid_.size()) throw std::invalid_argument("step_she: grid size mismatch");
    grid_.from_grid(s.z.values, {});
    auto spec = grid_.half_spectrum();
    const double inv = 1.0 / static_cast<double>(grid_.size());
    for (std::size_t k = 0; k < spec.size(); ++k) spec[k] *= decay_[k] * inv;
    grid_.half_spectrum_to_grid(s.z.values);
}

void SheStepper::step_deterministic(SheState& s) {
    heat(s);
    s.t += dt_;
}

void SheStepper::step(SheState& s, const NoiseIncrement& dw) {
    if (2 * static_cast<std::size_t>(dw.cutoff()) + 1 > grid_.size())
        throw std::invalid_argument("step_she: grid too small for the noise cutoff");
    heat(s);
    grid_.to_grid(dw.dw, noise_);
    for (std::size_t j = 0; j < noise_.size(); ++j) {
        const double v = s.z.values[j] * (1.0 + s.beta * noise_[j]);
        if (!(v > 0.0)) throw PositivityLoss("positivity loss at t = " + std::to_string(s.t) + "; reduce dt or N");
        s.z.values[j] = v;
    }
    s.t += dt_;
}

SheState step_she(const SheState& z, double dt, const NoiseIncrement& dw) {
    SheStepper stepper(z.z.size(), dt);
    SheState out = z;
    stepper.step(out, dw);
    return out;
}

GridField cole_hopf_height(const SheState& z) {
    if (!(z.beta > 0.0)) throw std::invalid_argument("cole_hopf_height: beta must be positive");
    GridField h(z.z.size());
    for (std::size_t j = 0; j < h.size(); ++j) {
        const double v = z.z.values[j];
        if (!(v > 0.0)) throw PositivityLoss("cole_hopf_height: nonpositive value");
        h.values[j] = std::log(v) / z.beta;
    }
    return h;
}

SheState she_from_height(const GridField& h, double beta) {
    SheState s;
    s.beta = beta;
    s.z = GridField(h.size());
    for (std::size_t j = 0; j < h.size(); ++j) s.z.values[j] = std::exp(beta * h.values[j]);
    return s;
}

double coupled_tube_bound(const std::vector<GridField>& h1, const std::vector<GridField>& h2) {
    if (h1.size() != h2.size()) throw std::invalid_argument("coupled_tube_bound: trajectory lengths differ");
    double worst = 0.0;
    for (std::size_t t = 0; t < h1.size(); ++t) {
        if (h1[t].size() != h2[t].size()) throw std::invalid_argument("coupled_tube_bound: grid size mismatch");
        for (std::size_t j = 0; j < h1[t].size(); ++j)
            worst = std::max(worst, std::abs(h1[t].values[j] - h2[t].values[j]));
    }
    return worst;
}

}  // namespace kpz
