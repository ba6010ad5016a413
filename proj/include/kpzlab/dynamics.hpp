#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "kpzlab/nonlinearity.hpp"
#include "kpzlab/rng.hpp"
#include "kpzlab/torus.hpp"

namespace kpz {

class ProbeFamily;

struct SimulationConfig {
    int n = 16;
    double dt = 1e-4;
    double horizon = 0.5;
    double alpha = 1.0;
    std::uint64_t seed = 1;
    int grid_oversample = 2;
    /// Cutoff of the residual field h2 as a multiple of n.
    int residual_factor = 2;

    double eps_n() const { return kPi / n; }
    long steps() const;
    /// Throws std::invalid_argument on inconsistent parameters.
    void validate() const;

    bool operator==(const SimulationConfig&) const = default;
};

/// Heuristic explicit-step bound: largest dt for which the linearized
/// nonlinear increment stays below the OU contraction at every mode, using
/// the Lipschitz constant of F on six standard deviations of the equilibrium
/// grid values. Reported, not enforced; the overflow guard is the hard stop.
double stability_bound(const SimulationConfig& cfg, const NonlinearitySpec& f);

class StabilityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr double kOverflowGuard = 1e12;

/// Brownian increments dW_k, k = 0..N, with E|dW_k|^2 = 2 dt. dW_0 is real.
struct NoiseIncrement {
    double dt = 0.0;
    std::vector<Complex> dw;
    int cutoff() const { return static_cast<int>(dw.size()) - 1; }
};

/// Deterministic increment stream for one trajectory.
class NoiseSource {
public:
    NoiseSource(int cutoff, std::uint64_t seed, std::uint64_t stream);
    NoiseIncrement next(double dt);
    void next(double dt, NoiseIncrement& out);

private:
    int cutoff_;
    RngStream rng_;
};

/// Exponential-Euler stepper for the Galerkin Burgers equation
///   du = -(-Lap)^a u + eps^-1 P_N d_x F(eps^1/2 u) + (-Lap)^(a/2) P_N dW.
class BurgersStepper {
public:
    BurgersStepper(const SimulationConfig& cfg, NonlinearitySpec f);

    /// Advances u (cutoff N, zero mean) in place by one step.
    void step(SpectralField& u, const NoiseIncrement& dw);
    /// Same, without noise.
    void step_deterministic(SpectralField& u);

    const SimulationConfig& config() const { return cfg_; }

private:
    void advance(SpectralField& u, const NoiseIncrement* dw);

    SimulationConfig cfg_;
    NonlinearitySpec f_;
    double eps_;
    GridTransform grid_;
    std::vector<double> values_;
    std::vector<Complex> nl_;
    std::vector<double> decay_, phi1_;
    std::vector<Complex> noise_scale_;
};

SpectralField step_burgers(const SpectralField& u, const SimulationConfig& cfg, const NonlinearitySpec& f,
                           const NoiseIncrement& dw);

struct CoupledState {
    SpectralField h1;  ///< cutoff N
    SpectralField h2;  ///< cutoff residual_factor * N
    double t = 0.0;

    /// d_x (h1 + h2), at the residual cutoff.
    SpectralField velocity() const;
    SpectralField height() const { return h1 + h2; }
};

/// Exponential-Euler stepper for the KPZ pair (h1, h2). Only alpha = 1.
class KpzPairStepper {
public:
    KpzPairStepper(const SimulationConfig& cfg, NonlinearitySpec f);

    void step(CoupledState& s, const NoiseIncrement& dw);

    int residual_cutoff() const { return n2_; }
    std::size_t grid_size() const { return grid_.size(); }
    /// sup_x |h2| on the evaluation grid.
    double residual_sup(const CoupledState& s);

private:
    SimulationConfig cfg_;
    NonlinearitySpec f_;
    double eps_;
    int n2_;
    GridTransform grid_;
    std::vector<Complex> d1_, d2_, nl1_, nl2_;
    std::vector<double> g1_, g2_, f1_, f2_;
    std::vector<double> decay_, phi1_, noise_scale_;
};

CoupledState step_kpz_pair(const CoupledState& s, const SimulationConfig& cfg, const NonlinearitySpec& f,
                           const NoiseIncrement& dw);

/// Fresh pair state with h1 at cutoff N and h2 at the residual cutoff.
CoupledState make_coupled_state(const SimulationConfig& cfg, const SpectralField& h1, const SpectralField& h2);

enum class Model { burgers, kpz_pair };

struct InitialState {
    SpectralField u;      ///< Burgers start (cutoff N, zero mean)
    CoupledState pair;    ///< KPZ pair start
};

/// Per-trajectory initial state; the stream index is the trajectory id.
using InitialLaw = std::function<InitialState(std::size_t trajectory)>;

struct SimulationOptions {
    Model model = Model::burgers;
    std::size_t ensemble = 1;
    /// Record every this many steps (t = 0 and the final time always).
    long record_every = 0;
    bool record_modes = false;
    unsigned workers = 0;  ///< 0 = hardware concurrency
    /// Noise streams start at this index (coupled runs share offsets).
    std::uint64_t stream_offset = 0;
};

struct Trajectory {
    std::size_t id = 0;
    bool failed = false;
    std::string failure;
    /// values[t * probes + p] = <u(t), Phi_p>
    std::vector<double> values;
    /// modes[t] = u_0..u_N at recorded time t (if requested)
    std::vector<std::vector<Complex>> modes;
    /// KPZ pair only: sup |h2| at t = 0 and max over recorded steps.
    double residual_initial_sup = 0.0;
    double residual_max_sup = 0.0;
};

struct TrajectoryEnsemble {
    SimulationConfig config;
    std::string nonlinearity;
    std::size_t probe_count = 0;
    std::vector<double> times;
    std::vector<Trajectory> trajectories;

    std::size_t failures() const;
    double value(std::size_t trajectory, std::size_t time, std::size_t probe) const {
        return trajectories[trajectory].values[time * probe_count + probe];
    }
};

/// Step indices at which trajectories are recorded: 0, every, 2 every, ...
/// and the final step.
std::vector<long> record_steps(const SimulationConfig& cfg, long every);

/// Advances every trajectory to cfg.horizon, recording probe pairings.
/// Stepper failures are captured in the trajectory, not rethrown.
TrajectoryEnsemble simulate(const SimulationConfig& cfg, const InitialLaw& init, const NonlinearitySpec& f,
                            const ProbeFamily& probes, const SimulationOptions& options);

/// Single-trajectory convenience overloads with a fixed start.
TrajectoryEnsemble simulate(const SimulationConfig& cfg, const SpectralField& u0, const NonlinearitySpec& f,
                            const ProbeFamily& probes, SimulationOptions options = {});
TrajectoryEnsemble simulate(const SimulationConfig& cfg, const CoupledState& s0, const NonlinearitySpec& f,
                            const ProbeFamily& probes, SimulationOptions options = {});

/// S(alpha, N) = sum over 1 <= |k1|, |k2| <= N of (|k1|^a + |k2|^a)^-2.
double boltzmann_gibbs_sum(double alpha, int n);

/// Mode-iid complex Gaussians with E|u_k|^2 = 1, k = 1..N: the projected
/// white-noise law that the Burgers dynamics leaves invariant.
SpectralField sample_white_noise(int n, RngStream& rng);

}  // namespace kpz
