#pragma once

#include <string>
#include <vector>

#include "kpzlab/torus.hpp"

namespace kpz {

struct Probe {
    std::string name;
    SpectralField coeffs;
    double sup_norm = 0.0;        ///< ||Phi||_inf
    double derivative_sup = 0.0;  ///< ||Phi'||_inf
};

/// Test functions Phi on the torus with exact spectra. Every member satisfies
/// max(||Phi||_inf, ||Phi'||_inf) <= 1.
class ProbeFamily {
public:
    ProbeFamily() = default;
    explicit ProbeFamily(std::vector<Probe> probes);

    /// sqrt2 sin(2 pi k x) and sqrt2 cos(2 pi k x), k = 1..max_k, each scaled
    /// by 1/(1 + 2 pi k) and then by whatever factor the norm ball needs.
    static ProbeFamily default_dictionary(int max_k = 8);

    /// Text format, one probe per line: `name k re im [k re im ...]` listing
    /// nonnegative modes. Norms are computed and probes rescaled into the ball.
    static ProbeFamily load(const std::string& path);

    /// A single probe from its half spectrum, rescaled into the ball.
    static Probe make_probe(std::string name, const SpectralField& coeffs);

    std::size_t size() const { return probes_.size(); }
    bool empty() const { return probes_.empty(); }
    const Probe& operator[](std::size_t i) const { return probes_[i]; }
    const std::vector<Probe>& probes() const { return probes_; }

    /// <u, Phi_p> for every probe.
    std::vector<double> pair(const SpectralField& u) const;

private:
    std::vector<Probe> probes_;
};

}  // namespace kpz
