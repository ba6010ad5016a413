#include "kpzlab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "kpzlab/parallel.hpp"
#include "kpzlab/probes.hpp"

namespace kpz {

long SimulationConfig::steps() const {
    if (horizon <= 0.0) return 0;
    return std::lround(std::ceil(horizon / dt - 1e-9));
}

void SimulationConfig::validate() const {
    if (n < 1) throw std::invalid_argument("cutoff n must be >= 1");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("dt must be positive");
    if (!(horizon >= 0.0) || !std::isfinite(horizon)) throw std::invalid_argument("horizon must be >= 0");
    if (!(alpha > 0.5 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in (1/2, 1]");
    if (grid_oversample < 2) throw std::invalid_argument("grid_oversample must be >= 2");
    if (residual_factor < 1) throw std::invalid_argument("residual_factor must be >= 1");
}

double stability_bound(const SimulationConfig& cfg, const NonlinearitySpec& f) {
    cfg.validate();
    const double eps = cfg.eps_n();
    const double radius = std::sqrt(eps) * 6.0 * std::sqrt(2.0 * cfg.n);
    const double c = f.lipschitz_radius_policy(radius) / std::sqrt(eps);
    if (c <= 0.0) return std::numeric_limits<double>::infinity();
    double bound = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= cfg.n; ++k) {
        const double wave = kTwoPi * k;
        const double lambda = fractional_symbol(k, cfg.alpha, 1.0);
        // min(dt, 1/lambda) * c * wave <= 1; modes with c * wave <= lambda
        // are held by the dissipation for every dt.
        if (c * wave > lambda) bound = std::min(bound, 1.0 / (c * wave));
    }
    return bound;
}

// ---------------------------------------------------------------------------
// Noise

NoiseSource::NoiseSource(int cutoff, std::uint64_t seed, std::uint64_t stream)
    : cutoff_(cutoff), rng_(seed, stream, Channel::dynamics) {
    if (cutoff < 0) throw std::invalid_argument("NoiseSource: negative cutoff");
}

void NoiseSource::next(double dt, NoiseIncrement& out) {
    out.dt = dt;
    out.dw.resize(static_cast<std::size_t>(cutoff_) + 1);
    const double sd = std::sqrt(dt);
    out.dw[0] = Complex{std::sqrt(2.0) * sd * rng_.normal(), 0.0};
    for (int k = 1; k <= cutoff_; ++k) {
        const double re = rng_.normal();
        const double im = rng_.normal();
        out.dw[static_cast<std::size_t>(k)] = Complex{sd * re, sd * im};
    }
}

NoiseIncrement NoiseSource::next(double dt) {
    NoiseIncrement out;
    next(dt, out);
    return out;
}

namespace {

void check_finite(Complex v, int k) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()) || std::abs(v) > kOverflowGuard)
        throw StabilityError("overflow at mode " + std::to_string(k) + "; reduce dt");
}

// (1 - e^{-x}) / x, accurate near 0
double phi1_ratio(double x) { return x < 1e-12 ? 1.0 - 0.5 * x : -std::expm1(-x) / x; }

}  // namespace

// ---------------------------------------------------------------------------
// Burgers

BurgersStepper::BurgersStepper(const SimulationConfig& cfg, NonlinearitySpec f)
    : cfg_(cfg),
      f_(std::move(f)),
      eps_(cfg.eps_n()),
      grid_(dealiased_grid_size(cfg.n, cfg.grid_oversample)),
      values_(grid_.size()),
      nl_(static_cast<std::size_t>(cfg.n) + 1) {
    cfg_.validate();
    const auto n1 = static_cast<std::size_t>(cfg.n) + 1;
    decay_.assign(n1, 1.0);
    phi1_.assign(n1, cfg.dt);
    noise_scale_.assign(n1, Complex{});
    // One formula for every alpha, so alpha = 1 is the classical scheme exactly.
    for (int k = 1; k <= cfg.n; ++k) {
        const double lambda = fractional_symbol(k, cfg.alpha, 1.0);
        const double x = lambda * cfg.dt;
        const auto i = static_cast<std::size_t>(k);
        decay_[i] = std::exp(-x);
        phi1_[i] = cfg.dt * phi1_ratio(x);
        const double g = fractional_symbol(k, cfg.alpha, 0.5);
        noise_scale_[i] = Complex{0.0, g * std::sqrt(phi1_ratio(2.0 * x))};
    }
}

void BurgersStepper::advance(SpectralField& u, const NoiseIncrement* dw) {
    if (u.cutoff() != cfg_.n) throw std::invalid_argument("step_burgers: field cutoff differs from cfg.n");
    if (dw && dw->cutoff() < cfg_.n) throw std::invalid_argument("step_burgers: noise cutoff below n");
    auto modes = u.mutable_modes();
    grid_.to_grid(modes, values_);
    const double root = std::sqrt(eps_);
    for (double& v : values_) v = f_.eval(root * v);
    grid_.from_grid(values_, nl_);
    for (int k = 1; k <= cfg_.n; ++k) {
        const auto i = static_cast<std::size_t>(k);
        const Complex nl = Complex{0.0, kTwoPi * k / eps_} * nl_[i];
        Complex next = decay_[i] * modes[i] + phi1_[i] * nl;
        if (dw) next += noise_scale_[i] * dw->dw[i];
        check_finite(next, k);
        modes[i] = next;
    }
    modes[0] = Complex{};
    u.set_zero_mean(true);
}

void BurgersStepper::step(SpectralField& u, const NoiseIncrement& dw) { advance(u, &dw); }
void BurgersStepper::step_deterministic(SpectralField& u) { advance(u, nullptr); }

SpectralField step_burgers(const SpectralField& u, const SimulationConfig& cfg, const NonlinearitySpec& f,
                           const NoiseIncrement& dw) {
    BurgersStepper stepper(cfg, f);
    SpectralField out = u;
    stepper.step(out, dw);
    return out;
}

// ---------------------------------------------------------------------------
// KPZ pair

SpectralField CoupledState::velocity() const { return derivative(h1 + h2); }

CoupledState make_coupled_state(const SimulationConfig& cfg, const SpectralField& h1, const SpectralField& h2) {
    CoupledState s;
    s.h1 = SpectralField(cfg.n);
    s.h2 = SpectralField(cfg.residual_factor * cfg.n);
    for (int k = 0; k <= std::min(cfg.n, h1.cutoff()); ++k) s.h1.set(k, h1[k]);
    for (int k = 0; k <= std::min(s.h2.cutoff(), h2.cutoff()); ++k) s.h2.set(k, h2[k]);
    return s;
}

KpzPairStepper::KpzPairStepper(const SimulationConfig& cfg, NonlinearitySpec f)
    : cfg_(cfg),
      f_(std::move(f)),
      eps_(cfg.eps_n()),
      n2_(cfg.residual_factor * cfg.n),
      grid_(dealiased_grid_size(n2_, cfg.grid_oversample)) {
    cfg_.validate();
    if (cfg.alpha != 1.0) throw std::invalid_argument("KPZ pair is defined for alpha = 1 only");
    const std::size_t m = grid_.size();
    d1_.resize(static_cast<std::size_t>(cfg.n) + 1);
    d2_.resize(static_cast<std::size_t>(n2_) + 1);
    nl1_.resize(d1_.size());
    nl2_.resize(d2_.size());
    g1_.resize(m);
    g2_.resize(m);
    f1_.resize(m);
    f2_.resize(m);
    decay_.assign(d2_.size(), 1.0);
    phi1_.assign(d2_.size(), cfg.dt);
    noise_scale_.assign(d2_.size(), 1.0);
    for (int k = 1; k <= n2_; ++k) {
        const double x = fractional_symbol(k, 1.0, 1.0) * cfg.dt;
        const auto i = static_cast<std::size_t>(k);
        decay_[i] = std::exp(-x);
        phi1_[i] = cfg.dt * phi1_ratio(x);
        noise_scale_[i] = std::sqrt(phi1_ratio(2.0 * x));
    }
}

void KpzPairStepper::step(CoupledState& s, const NoiseIncrement& dw) {
    const int n = cfg_.n;
    if (s.h1.cutoff() != n || s.h2.cutoff() != n2_)
        throw std::invalid_argument("step_kpz_pair: state cutoffs do not match the configuration");
    if (dw.cutoff() < n) throw std::invalid_argument("step_kpz_pair: noise cutoff below n");
    auto h1 = s.h1.mutable_modes();
    auto h2 = s.h2.mutable_modes();
    d1_[0] = Complex{};
    for (int k = 1; k <= n; ++k) d1_[static_cast<std::size_t>(k)] = Complex{0.0, kTwoPi * k} * h1[static_cast<std::size_t>(k)];
    d2_[0] = Complex{};
    for (int k = 1; k <= n2_; ++k) d2_[static_cast<std::size_t>(k)] = Complex{0.0, kTwoPi * k} * h2[static_cast<std::size_t>(k)];
    grid_.to_grid(d1_, g1_);
    grid_.to_grid(d2_, g2_);
    const double root = std::sqrt(eps_);
    for (std::size_t j = 0; j < g1_.size(); ++j) {
        const double a = f_.eval(root * g1_[j]);
        f1_[j] = a;
        f2_[j] = f_.eval(root * (g1_[j] + g2_[j])) - a;
    }
    grid_.from_grid(f1_, nl1_);
    grid_.from_grid(f2_, nl2_);

    const double inv_eps = 1.0 / eps_;
    h1[0] += cfg_.dt * inv_eps * nl1_[0].real() + dw.dw[0].real();
    h2[0] += cfg_.dt * inv_eps * nl2_[0].real();
    check_finite(h1[0], 0);
    check_finite(h2[0], 0);
    for (int k = 1; k <= n2_; ++k) {
        const auto i = static_cast<std::size_t>(k);
        if (k <= n) {
            h1[i] = decay_[i] * h1[i] + phi1_[i] * inv_eps * nl1_[i] + noise_scale_[i] * dw.dw[i];
            check_finite(h1[i], k);
        }
        h2[i] = decay_[i] * h2[i] + phi1_[i] * inv_eps * nl2_[i];
        check_finite(h2[i], k);
    }
    s.h1.enforce_invariants();
    s.h2.enforce_invariants();
    s.t += cfg_.dt;
}

double KpzPairStepper::residual_sup(const CoupledState& s) {
    grid_.to_grid(s.h2.modes(), g2_);
    double worst = 0.0;
    for (double v : g2_) worst = std::max(worst, std::abs(v));
    return worst;
}

CoupledState step_kpz_pair(const CoupledState& s, const SimulationConfig& cfg, const NonlinearitySpec& f,
                           const NoiseIncrement& dw) {
    KpzPairStepper stepper(cfg, f);
    CoupledState out = s;
    stepper.step(out, dw);
    return out;
}

// ---------------------------------------------------------------------------
// Ensembles

std::size_t TrajectoryEnsemble::failures() const {
    return static_cast<std::size_t>(
        std::count_if(trajectories.begin(), trajectories.end(), [](const Trajectory& t) { return t.failed; }));
}

std::vector<long> record_steps(const SimulationConfig& cfg, long every) {
    const long total = cfg.steps();
    std::vector<long> out{0};
    if (every > 0)
        for (long s = every; s < total; s += every) out.push_back(s);
    if (total > 0) out.push_back(total);
    return out;
}

namespace {

void record(Trajectory& traj, const SpectralField& u, const ProbeFamily& probes, bool modes) {
    const auto values = probes.pair(u);
    traj.values.insert(traj.values.end(), values.begin(), values.end());
    if (modes) traj.modes.emplace_back(u.modes().begin(), u.modes().end());
}

Trajectory run_one(const SimulationConfig& cfg, const InitialState& init, const NonlinearitySpec& f,
                   const ProbeFamily& probes, const SimulationOptions& options, const std::vector<long>& marks,
                   std::size_t id) {
    Trajectory traj;
    traj.id = id;
    NoiseSource noise(cfg.n, cfg.seed, options.stream_offset + id);
    NoiseIncrement dw;
    const long total = cfg.steps();
    std::size_t next_mark = 0;
    try {
        if (options.model == Model::burgers) {
            BurgersStepper stepper(cfg, f);
            SpectralField u = init.u;
            if (u.cutoff() != cfg.n) u = with_cutoff(u, cfg.n);
            u.set_zero_mean(true);
            for (long s = 0; s <= total; ++s) {
                if (next_mark < marks.size() && marks[next_mark] == s) {
                    record(traj, u, probes, options.record_modes);
                    ++next_mark;
                }
                if (s == total) break;
                noise.next(cfg.dt, dw);
                stepper.step(u, dw);
            }
        } else {
            KpzPairStepper stepper(cfg, f);
            CoupledState st = make_coupled_state(cfg, init.pair.h1, init.pair.h2);
            traj.residual_initial_sup = stepper.residual_sup(st);
            traj.residual_max_sup = traj.residual_initial_sup;
            for (long s = 0; s <= total; ++s) {
                if (next_mark < marks.size() && marks[next_mark] == s) {
                    record(traj, st.velocity(), probes, options.record_modes);
                    ++next_mark;
                }
                if (s == total) break;
                noise.next(cfg.dt, dw);
                stepper.step(st, dw);
                traj.residual_max_sup = std::max(traj.residual_max_sup, stepper.residual_sup(st));
            }
        }
    } catch (const StabilityError& e) {
        traj.failed = true;
        traj.failure = e.what();
    }
    return traj;
}

}  // namespace

TrajectoryEnsemble simulate(const SimulationConfig& cfg, const InitialLaw& init, const NonlinearitySpec& f,
                            const ProbeFamily& probes, const SimulationOptions& options) {
    cfg.validate();
    if (probes.empty()) throw std::invalid_argument("simulate: probe family is empty");
    if (options.model == Model::kpz_pair && cfg.alpha != 1.0)
        throw std::invalid_argument("KPZ pair is defined for alpha = 1 only");
    TrajectoryEnsemble out;
    out.config = cfg;
    out.nonlinearity = f.name;
    out.probe_count = probes.size();
    const auto marks = record_steps(cfg, options.record_every);
    for (long s : marks) out.times.push_back(static_cast<double>(s) * cfg.dt);
    out.trajectories.resize(options.ensemble);
    const unsigned workers = options.workers ? options.workers : default_workers();
    parallel_for(options.ensemble, workers, [&](std::size_t i) {
        out.trajectories[i] = run_one(cfg, init(i), f, probes, options, marks, i);
    });
    return out;
}

TrajectoryEnsemble simulate(const SimulationConfig& cfg, const SpectralField& u0, const NonlinearitySpec& f,
                            const ProbeFamily& probes, SimulationOptions options) {
    options.model = Model::burgers;
    return simulate(cfg, [&](std::size_t) { return InitialState{u0, {}}; }, f, probes, options);
}

TrajectoryEnsemble simulate(const SimulationConfig& cfg, const CoupledState& s0, const NonlinearitySpec& f,
                            const ProbeFamily& probes, SimulationOptions options) {
    options.model = Model::kpz_pair;
    return simulate(cfg, [&](std::size_t) { return InitialState{{}, s0}; }, f, probes, options);
}

double boltzmann_gibbs_sum(double alpha, int n) {
    if (!(alpha > 0.0)) throw std::invalid_argument("boltzmann_gibbs_sum: alpha must be positive");
    if (n < 1) throw std::invalid_argument("boltzmann_gibbs_sum: n must be >= 1");
    std::vector<double> powk(static_cast<std::size_t>(n) + 1);
    for (int k = 1; k <= n; ++k) powk[static_cast<std::size_t>(k)] = std::pow(static_cast<double>(k), alpha);
    // Four sign combinations per (|k1|, |k2|) pair.
    double sum = 0.0;
    for (int a = 1; a <= n; ++a)
        for (int b = 1; b <= n; ++b) {
            const double d = powk[static_cast<std::size_t>(a)] + powk[static_cast<std::size_t>(b)];
            sum += 1.0 / (d * d);
        }
    return 4.0 * sum;
}

SpectralField sample_white_noise(int n, RngStream& rng) {
    SpectralField u(n, true);
    const double sd = std::sqrt(0.5);
    for (int k = 1; k <= n; ++k) {
        const double re = rng.normal();
        const double im = rng.normal();
        u.set(k, Complex{sd * re, sd * im});
    }
    return u;
}

}  // namespace kpz
