#pragma once

#include <functional>
#include <vector>

#include "kpzlab/probes.hpp"
#include "kpzlab/torus.hpp"

namespace kpz {

/// Probability vector on {0, ..., n-1}.
class FiniteMeasure {
public:
    /// Rejects negative entries and totals farther than 1e-12 from one.
    explicit FiniteMeasure(std::vector<double> weights);
    /// Rescales nonnegative weights to total mass one.
    static FiniteMeasure normalized(std::vector<double> weights);

    std::size_t size() const { return w_.size(); }
    double operator[](std::size_t i) const { return w_[i]; }
    const std::vector<double>& weights() const { return w_; }
    /// Mass of an event given as a list of support indices.
    double mass(const std::vector<std::size_t>& event) const;

private:
    std::vector<double> w_;
};

/// H(P1 | P2), +inf without absolute continuity.
double relative_entropy(const FiniteMeasure& p1, const FiniteMeasure& p2);

struct EntropyInequality {
    double lhs = 0.0;  ///< P1(event)
    double rhs = 0.0;  ///< (log 2 + H(P1|P2)) / log(1 + 1/P2(event))
    bool holds = false;
};

EntropyInequality entropy_inequality_bound(const FiniteMeasure& p1, const FiniteMeasure& p2,
                                           const std::vector<std::size_t>& event);

/// Image measure under map: {0..n-1} -> {0..target_size-1}.
FiniteMeasure pushforward(const FiniteMeasure& p, const std::vector<std::size_t>& map, std::size_t target_size);

struct ContractionReport {
    double image_entropy = 0.0;   ///< H(map_* P1 | map_* P2)
    double source_entropy = 0.0;  ///< H(P1 | P2)
    bool holds = false;
};

ContractionReport contraction_check(const FiniteMeasure& p1, const FiniteMeasure& p2,
                                    const std::vector<std::size_t>& map, std::size_t target_size);

/// Row-stochastic transition matrix on a finite state space.
using TransitionKernel = std::vector<std::vector<double>>;

/// Law of the path (X_0, ..., X_m) of a chain started from `initial`, indexed
/// by the path written in base n with X_0 as the most significant digit.
FiniteMeasure path_law(const FiniteMeasure& initial, const TransitionKernel& kernel, int steps);

/// Sum over modes of the Gaussian KL between a centered fit with variance
/// v_k = mean |u_k|^2 and the reference variance. samples[k] are the draws
/// of mode k; each needs >= 100 samples.
double gaussian_mode_kl(const std::vector<std::vector<Complex>>& samples, double reference_variance);

/// The same from per-mode variances directly.
double gaussian_kl_from_variances(const std::vector<double>& variances, double reference_variance);

/// Per-pair probe pairings at one time: first[i][p], second[i][p].
/// Returns mean_i max_p |first[i][p] - second[i][p]|.
double wasserstein_coupled_bound(const std::vector<std::vector<double>>& first,
                                 const std::vector<std::vector<double>>& second);

/// Exact 1-Wasserstein distance (cost max_p |x_p - y_p|) between two
/// empirical measures of equal size, by enumerating every pairing. Small
/// ensembles only (size <= 8).
double brute_force_wasserstein(const std::vector<std::vector<double>>& first,
                               const std::vector<std::vector<double>>& second);

struct DecayFit {
    double rate = 0.0;      ///< C in values ~ A exp(-C t)
    double residual = 0.0;  ///< RMS of the log-linear fit
    /// residual / |log(max) - log(min)|; 0 for a flat series
    double relative_residual = 0.0;
};

DecayFit fit_exponential_decay(const std::vector<double>& times, const std::vector<double>& values);

/// Two-sample Kolmogorov-Smirnov test.
struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Asymptotic Kolmogorov tail P(K > x).
double kolmogorov_tail(double x);

/// Surrogate report for the entropy decay experiment.
struct EntropyReport {
    std::vector<double> times;
    std::vector<double> surrogate_entropy;
    double fitted_rate = 0.0;
    double fit_residual = 0.0;
    double relative_fit_residual = 0.0;
};

}  // namespace kpz
