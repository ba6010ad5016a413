#include "kpzlab/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace kpz {

FiniteMeasure::FiniteMeasure(std::vector<double> weights) : w_(std::move(weights)) {
    if (w_.empty()) throw std::invalid_argument("FiniteMeasure: empty support");
    double total = 0.0;
    for (double w : w_) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("FiniteMeasure: negative or non-finite weight");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("FiniteMeasure: weights do not sum to one");
}

FiniteMeasure FiniteMeasure::normalized(std::vector<double> weights) {
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (!(total > 0.0)) throw std::invalid_argument("FiniteMeasure: total mass must be positive");
    for (double& w : weights) w /= total;
    // Push the rounding residue onto the largest entry.
    const auto it = std::max_element(weights.begin(), weights.end());
    *it += 1.0 - std::accumulate(weights.begin(), weights.end(), 0.0);
    return FiniteMeasure(std::move(weights));
}

double FiniteMeasure::mass(const std::vector<std::size_t>& event) const {
    double m = 0.0;
    for (std::size_t i : event) {
        if (i >= w_.size()) throw std::out_of_range("FiniteMeasure::mass: index outside the support");
        m += w_[i];
    }
    return m;
}

double relative_entropy(const FiniteMeasure& p1, const FiniteMeasure& p2) {
    if (p1.size() != p2.size()) throw std::invalid_argument("relative_entropy: support sizes differ");
    double h = 0.0;
    for (std::size_t i = 0; i < p1.size(); ++i) {
        if (p1[i] == 0.0) continue;
        if (p2[i] == 0.0) return std::numeric_limits<double>::infinity();
        h += p1[i] * std::log(p1[i] / p2[i]);
    }
    // Rounding can push a zero entropy slightly negative.
    return std::max(h, 0.0);
}

EntropyInequality entropy_inequality_bound(const FiniteMeasure& p1, const FiniteMeasure& p2,
                                           const std::vector<std::size_t>& event) {
    if (p1.size() != p2.size()) throw std::invalid_argument("entropy_inequality_bound: support sizes differ");
    const double q = p2.mass(event);
    if (!(q > 0.0)) throw std::invalid_argument("entropy_inequality_bound: event has zero reference mass");
    EntropyInequality out;
    out.lhs = p1.mass(event);
    out.rhs = (std::log(2.0) + relative_entropy(p1, p2)) / std::log1p(1.0 / q);
    out.holds = out.lhs <= out.rhs;
    return out;
}

FiniteMeasure pushforward(const FiniteMeasure& p, const std::vector<std::size_t>& map, std::size_t target_size) {
    if (map.size() != p.size()) throw std::invalid_argument("pushforward: map must be total on the support");
    std::vector<double> w(target_size, 0.0);
    for (std::size_t i = 0; i < map.size(); ++i) {
        if (map[i] >= target_size) throw std::out_of_range("pushforward: map leaves the target space");
        w[map[i]] += p[i];
    }
    return FiniteMeasure::normalized(std::move(w));
}

ContractionReport contraction_check(const FiniteMeasure& p1, const FiniteMeasure& p2,
                                    const std::vector<std::size_t>& map, std::size_t target_size) {
    ContractionReport r;
    r.source_entropy = relative_entropy(p1, p2);
    r.image_entropy = relative_entropy(pushforward(p1, map, target_size), pushforward(p2, map, target_size));
    r.holds = r.image_entropy <= r.source_entropy * (1.0 + 1e-12) + 1e-15;
    return r;
}

FiniteMeasure path_law(const FiniteMeasure& initial, const TransitionKernel& kernel, int steps) {
    const std::size_t n = initial.size();
    if (kernel.size() != n) throw std::invalid_argument("path_law: kernel size differs from the state space");
    for (const auto& row : kernel)
        if (row.size() != n) throw std::invalid_argument("path_law: kernel must be square");
    if (steps < 0) throw std::invalid_argument("path_law: negative step count");
    std::vector<double> law(initial.weights());
    for (int s = 0; s < steps; ++s) {
        std::vector<double> next(law.size() * n);
        for (std::size_t path = 0; path < law.size(); ++path) {
            const std::size_t last = path % n;
            for (std::size_t j = 0; j < n; ++j) next[path * n + j] = law[path] * kernel[last][j];
        }
        law = std::move(next);
    }
    return FiniteMeasure::normalized(std::move(law));
}

double gaussian_kl_from_variances(const std::vector<double>& variances, double reference_variance) {
    if (!(reference_variance > 0.0)) throw std::invalid_argument("gaussian KL: reference variance must be positive");
    double h = 0.0;
    for (double v : variances) {
        if (!(v > 0.0)) throw std::invalid_argument("gaussian KL: degenerate sample variance");
        const double r = v / reference_variance;
        h += 0.5 * (r - 1.0 - std::log(r));
    }
    return h;
}

double gaussian_mode_kl(const std::vector<std::vector<Complex>>& samples, double reference_variance) {
    std::vector<double> variances;
    variances.reserve(samples.size());
    for (const auto& mode : samples) {
        if (mode.size() < 100) throw std::invalid_argument("gaussian_mode_kl: need >= 100 samples per mode");
        double sum = 0.0;
        for (const Complex& c : mode) sum += std::norm(c);
        variances.push_back(sum / static_cast<double>(mode.size()));
    }
    return gaussian_kl_from_variances(variances, reference_variance);
}

namespace {

double pair_cost(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("probe vectors differ in length");
    double worst = 0.0;
    for (std::size_t p = 0; p < x.size(); ++p) worst = std::max(worst, std::abs(x[p] - y[p]));
    return worst;
}

}  // namespace

double wasserstein_coupled_bound(const std::vector<std::vector<double>>& first,
                                 const std::vector<std::vector<double>>& second) {
    if (first.size() != second.size()) throw std::invalid_argument("wasserstein_coupled_bound: ensemble sizes differ");
    if (first.empty()) return 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < first.size(); ++i) total += pair_cost(first[i], second[i]);
    return total / static_cast<double>(first.size());
}

double brute_force_wasserstein(const std::vector<std::vector<double>>& first,
                               const std::vector<std::vector<double>>& second) {
    if (first.size() != second.size()) throw std::invalid_argument("brute_force_wasserstein: ensemble sizes differ");
    if (first.size() > 8) throw std::invalid_argument("brute_force_wasserstein: ensemble too large to enumerate");
    // Between uniform empirical measures of equal size an optimal coupling is
    // a permutation (Birkhoff), so enumerating pairings is exact.
    std::vector<std::size_t> perm(first.size());
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double total = 0.0;
        for (std::size_t i = 0; i < perm.size(); ++i) total += pair_cost(first[i], second[perm[i]]);
        best = std::min(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return first.empty() ? 0.0 : best / static_cast<double>(first.size());
}

DecayFit fit_exponential_decay(const std::vector<double>& times, const std::vector<double>& values) {
    if (times.size() != values.size()) throw std::invalid_argument("fit_exponential_decay: size mismatch");
    if (times.size() < 4) throw std::invalid_argument("fit_exponential_decay: need >= 4 points");
    const auto n = static_cast<double>(times.size());
    std::vector<double> y(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!(values[i] > 0.0)) throw std::invalid_argument("fit_exponential_decay: values must be positive");
        y[i] = std::log(values[i]);
    }
    const double tm = std::accumulate(times.begin(), times.end(), 0.0) / n;
    const double ym = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        sxx += (times[i] - tm) * (times[i] - tm);
        sxy += (times[i] - tm) * (y[i] - ym);
    }
    if (!(sxx > 0.0)) throw std::invalid_argument("fit_exponential_decay: times must not all coincide");
    const double slope = sxy / sxx;
    double rss = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double r = y[i] - (ym + slope * (times[i] - tm));
        rss += r * r;
    }
    DecayFit fit;
    fit.rate = -slope;
    fit.residual = std::sqrt(rss / n);
    const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
    const double span = *hi - *lo;
    fit.relative_residual = span > 0.0 ? fit.residual / span : 0.0;
    return fit;
}

double kolmogorov_tail(double x) {
    if (x <= 0.0) return 1.0;
    if (x < 0.2) return 1.0;
    double sum = 0.0;
    for (int j = 1; j <= 100; ++j) {
        const double term = std::exp(-2.0 * j * j * x * x);
        sum += (j % 2 == 1 ? 2.0 : -2.0) * term;
        if (term < 1e-18) break;
    }
    return std::clamp(sum, 0.0, 1.0);
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    const double en = std::sqrt(na * nb / (na + nb));
    return {d, kolmogorov_tail((en + 0.12 + 0.11 / en) * d)};
}

}  // namespace kpz
