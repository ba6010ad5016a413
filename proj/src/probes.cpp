#include "kpzlab/probes.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace kpz {

namespace {

// Sup norms measured on a grid far finer than the probe's bandwidth; the
// relative sampling error is O((k/M)^2).
double grid_sup(const SpectralField& f) {
    const std::size_t m = fft_friendly_size(static_cast<std::size_t>(std::max(4096, 64 * f.cutoff())));
    return to_grid(f, m).sup_norm();
}

}  // namespace

ProbeFamily::ProbeFamily(std::vector<Probe> probes) : probes_(std::move(probes)) {}

Probe ProbeFamily::make_probe(std::string name, const SpectralField& coeffs) {
    Probe p{std::move(name), coeffs, grid_sup(coeffs), grid_sup(derivative(coeffs))};
    const double scale = std::max({p.sup_norm, p.derivative_sup, 1.0});
    if (scale > 1.0) {
        p.coeffs *= 1.0 / scale;
        p.sup_norm /= scale;
        p.derivative_sup /= scale;
    }
    return p;
}

ProbeFamily ProbeFamily::default_dictionary(int max_k) {
    if (max_k < 1) throw std::invalid_argument("probe dictionary needs max_k >= 1");
    std::vector<Probe> out;
    for (int k = 1; k <= max_k; ++k) {
        const double a = std::sqrt(2.0) / (1.0 + kTwoPi * k);
        // sin(2 pi k x) = (e_k - e_-k) / 2i, cos = (e_k + e_-k) / 2
        SpectralField s(k), c(k);
        s.set(k, Complex{0.0, -a / 2.0});
        c.set(k, Complex{a / 2.0, 0.0});
        out.push_back(make_probe("sin" + std::to_string(k), s));
        out.push_back(make_probe("cos" + std::to_string(k), c));
    }
    return ProbeFamily(std::move(out));
}

ProbeFamily ProbeFamily::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open probe file: " + path);
    std::vector<Probe> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string name;
        if (!(ls >> name)) continue;
        std::vector<std::pair<int, Complex>> entries;
        int k;
        double re, im;
        while (ls >> k >> re >> im) {
            if (k < 0) throw std::invalid_argument("probe file lists negative mode: " + line);
            entries.emplace_back(k, Complex{re, im});
        }
        if (entries.empty()) throw std::invalid_argument("probe without modes: " + line);
        int kmax = 0;
        for (auto& e : entries) kmax = std::max(kmax, e.first);
        SpectralField f(kmax);
        for (auto& [kk, v] : entries) f.set(kk, v);
        out.push_back(make_probe(name, f));
    }
    if (out.empty()) throw std::invalid_argument("probe file is empty: " + path);
    return ProbeFamily(std::move(out));
}

std::vector<double> ProbeFamily::pair(const SpectralField& u) const {
    std::vector<double> out(probes_.size());
    for (std::size_t i = 0; i < probes_.size(); ++i) out[i] = pairing(u, probes_[i].coeffs);
    return out;
}

}  // namespace kpz
