#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "kpzlab/config.hpp"
#include "kpzlab/dynamics.hpp"
#include "kpzlab/initial_data.hpp"
#include "kpzlab/measures.hpp"
#include "kpzlab/probes.hpp"

namespace kpz {

struct ExperimentReport {
    std::string experiment;
    bool passed = true;
    std::vector<std::string> failures;  ///< human-readable assertion failures
    nlohmann::json summary;
    std::vector<std::string> files;

    void fail(std::string why) {
        passed = false;
        failures.push_back(std::move(why));
    }
};

/// Dispatches on cfg.experiment. Writes outputs under cfg.output_dir.
ExperimentReport run_experiment(const ExperimentConfig& cfg);

ExperimentReport run_beta(const ExperimentConfig& cfg);
ExperimentReport run_simulate(const ExperimentConfig& cfg);
ExperimentReport run_she(const ExperimentConfig& cfg);
ExperimentReport run_sample_bridge(const ExperimentConfig& cfg);
ExperimentReport run_universality(const ExperimentConfig& cfg);
ExperimentReport run_ergodicity(const ExperimentConfig& cfg);
ExperimentReport run_invariance(const ExperimentConfig& cfg);
/// Invariance for every alpha in cfg.alphas plus the S(alpha, N)/N table.
ExperimentReport run_fractional(const ExperimentConfig& cfg);
/// The S(alpha, N)/N table alone.
ExperimentReport run_fractional_sum(const ExperimentConfig& cfg);

/// Tolerance 10 dt N^2 used for the residual envelope and coupled bounds.
double scheme_tolerance(const SimulationConfig& sim);

ProbeFamily probes_for(const ExperimentConfig& cfg);

// ---------------------------------------------------------------------------
// Building blocks shared with the tests.

/// Coupled-pair ensemble started from the conditioned-bridge decomposition
/// of `target` at tube width eps.
struct UniversalityRun {
    TrajectoryEnsemble ensemble;
    double mean_acceptance = 0.0;
    std::size_t envelope_violations = 0;
    double max_initial_residual = 0.0;
    double max_residual = 0.0;
};

UniversalityRun universality_ensemble(const SimulationConfig& sim, const NonlinearitySpec& f,
                                      const TargetProfile& target, double eps, const ExperimentConfig& cfg,
                                      const ProbeFamily& probes, std::uint64_t stream_offset);

/// Probe pairings of d_x (log z / beta) for an SHE ensemble started from
/// z = exp(beta P_N h0), recorded like `simulate`.
TrajectoryEnsemble cole_hopf_ensemble(const SimulationConfig& sim, double beta, const TargetProfile& target,
                                      const ProbeFamily& probes, std::size_t ensemble, long record_every,
                                      unsigned workers, std::uint64_t stream_offset);

/// Per-probe KS tests at the final time; Bonferroni over probes.
struct KsComparison {
    std::vector<KsResult> per_probe;
    double min_p = 1.0;
    bool rejected = false;
};

KsComparison compare_final_laws(const TrajectoryEnsemble& a, const TrajectoryEnsemble& b, double level);

/// Coupled SHE pairs with z2(0) = z1(0) exp(beta g), 0 <= g <= gap.
struct ComparisonRun {
    std::size_t pairs = 0;
    std::size_t order_violations = 0;
    double worst_order_defect = 0.0;  ///< max of (z1 - z2) / z2 over everything
    double max_tube_excess = 0.0;     ///< max of bound - initial gap
    std::size_t positivity_failures = 0;
};

ComparisonRun she_comparison(const SimulationConfig& sim, double beta, double gap, std::size_t pairs,
                             double tolerance, unsigned workers);

}  // namespace kpz
