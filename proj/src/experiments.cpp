#include "kpzlab/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>

#include "kpzlab/cole_hopf.hpp"
#include "kpzlab/nonlinearity.hpp"
#include "kpzlab/parallel.hpp"

namespace kpz {

namespace fs = std::filesystem;
using nlohmann::json;

double scheme_tolerance(const SimulationConfig& sim) {
    return 10.0 * sim.dt * static_cast<double>(sim.n) * static_cast<double>(sim.n);
}

ProbeFamily probes_for(const ExperimentConfig& cfg) {
    return cfg.probes_file.empty() ? ProbeFamily::default_dictionary() : ProbeFamily::load(cfg.probes_file);
}

namespace {

// ---------------------------------------------------------------------------
// Output plumbing

class Csv {
public:
    explicit Csv(std::string header) { out_ << header << '\n'; }

    Csv& operator<<(double v) { return cell(format_double(v)); }
    Csv& operator<<(int v) { return cell(std::to_string(v)); }
    Csv& operator<<(long v) { return cell(std::to_string(v)); }
    Csv& operator<<(std::size_t v) { return cell(std::to_string(v)); }
    Csv& operator<<(const std::string& v) { return cell(v); }
    void end_row() {
        out_ << '\n';
        first_ = true;
    }
    std::string str() const { return out_.str(); }

private:
    Csv& cell(const std::string& s) {
        if (!first_) out_ << ',';
        out_ << s;
        first_ = false;
        return *this;
    }
    std::ostringstream out_;
    bool first_ = true;
};

void write_file(ExperimentReport& report, const ExperimentConfig& cfg, const std::string& name,
                const std::string& content) {
    const fs::path dir(cfg.output_dir);
    fs::create_directories(dir);
    const fs::path path = dir / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
    report.files.push_back(path.string());
}

ExperimentReport start(const ExperimentConfig& cfg, const std::string& name) {
    cfg.validate();
    ExperimentReport r;
    r.experiment = name;
    r.summary["experiment"] = name;
    r.summary["config"] = print_config(cfg);
    return r;
}

ExperimentReport finish(ExperimentReport r, const ExperimentConfig& cfg) {
    r.summary["passed"] = r.passed;
    r.summary["failures"] = r.failures;
    write_file(r, cfg, r.experiment + ".json", r.summary.dump(2) + "\n");
    return r;
}

void append_ensemble(Csv& csv, const TrajectoryEnsemble& ens, const std::vector<std::string>& prefix) {
    for (const auto& t : ens.trajectories) {
        const std::size_t recorded = ens.probe_count ? t.values.size() / ens.probe_count : 0;
        for (std::size_t ti = 0; ti < recorded; ++ti)
            for (std::size_t p = 0; p < ens.probe_count; ++p) {
                for (const auto& s : prefix) csv << s;
                csv << t.id << ens.times[ti] << p << t.values[ti * ens.probe_count + p];
                csv.end_row();
            }
    }
}

void check_failure_rate(ExperimentReport& r, const TrajectoryEnsemble& ens, const std::string& label) {
    const std::size_t failed = ens.failures();
    if (static_cast<double>(failed) > 0.01 * static_cast<double>(ens.trajectories.size()))
        r.fail(label + ": " + std::to_string(failed) + " of " + std::to_string(ens.trajectories.size()) +
               " trajectories aborted (> 1%)");
}

SimulationConfig with_n(SimulationConfig sim, int n) {
    sim.n = n;
    return sim;
}

InitialLaw white_noise_law(const SimulationConfig& sim) {
    return [sim](std::size_t i) {
        RngStream rng(sim.seed, i, Channel::initial);
        return InitialState{sample_white_noise(sim.n, rng), {}};
    };
}

// Per-mode first and second moments of recorded modes, failed runs excluded.
struct ModeMoments {
    std::vector<Complex> mean;
    std::vector<double> second;
    std::size_t samples = 0;
};

ModeMoments mode_moments(const TrajectoryEnsemble& ens, std::size_t time, int n) {
    ModeMoments m;
    m.mean.assign(static_cast<std::size_t>(n) + 1, Complex{});
    m.second.assign(static_cast<std::size_t>(n) + 1, 0.0);
    for (const auto& t : ens.trajectories) {
        if (t.failed) continue;
        ++m.samples;
        for (int k = 1; k <= n; ++k) {
            const Complex c = t.modes[time][static_cast<std::size_t>(k)];
            m.mean[static_cast<std::size_t>(k)] += c;
            m.second[static_cast<std::size_t>(k)] += std::norm(c);
        }
    }
    if (m.samples == 0) return m;
    const auto e = static_cast<double>(m.samples);
    for (auto& c : m.mean) c /= e;
    for (auto& v : m.second) v /= e;
    return m;
}

void invariance_check(ExperimentReport& r, const ExperimentConfig& cfg, double alpha, Csv& csv, json& table) {
    SimulationConfig sim = cfg.sim;
    sim.alpha = alpha;
    const auto f = nonlinearity_by_name(cfg.nonlinearity);
    SimulationOptions opt;
    opt.ensemble = cfg.ensemble;
    opt.record_every = cfg.record_every;
    opt.record_modes = true;
    opt.workers = cfg.workers;
    const auto ens = simulate(sim, white_noise_law(sim), f, probes_for(cfg), opt);
    const std::string label = "alpha=" + format_double(alpha);
    check_failure_rate(r, ens, label);

    double worst_mean = 0.0, worst_second = 0.0;
    std::size_t samples = 0;
    for (std::size_t ti = 0; ti < ens.times.size(); ++ti) {
        const auto m = mode_moments(ens, ti, sim.n);
        samples = m.samples;
        for (int k = 1; k <= sim.n; ++k) {
            const auto i = static_cast<std::size_t>(k);
            csv << alpha << ens.times[ti] << k << m.mean[i].real() << m.mean[i].imag() << m.second[i];
            csv.end_row();
            worst_mean = std::max(worst_mean, std::abs(m.mean[i]));
            worst_second = std::max(worst_second, std::abs(m.second[i] - 1.0));
        }
    }
    const double e = static_cast<double>(std::max<std::size_t>(samples, 1));
    const double mean_bound = 4.0 / std::sqrt(e);
    const double second_bound = 4.0 * std::sqrt(2.0 / e);
    table.push_back({{"alpha", alpha},
                     {"samples", samples},
                     {"worst_mean", worst_mean},
                     {"mean_bound", mean_bound},
                     {"worst_second_moment_deviation", worst_second},
                     {"second_moment_bound", second_bound},
                     {"stability_bound", stability_bound(sim, f)}});
    if (worst_mean > mean_bound)
        r.fail(label + ": per-mode mean " + format_double(worst_mean) + " exceeds " + format_double(mean_bound));
    if (worst_second > second_bound)
        r.fail(label + ": second moment deviation " + format_double(worst_second) + " exceeds " +
               format_double(second_bound));
}

struct SumRow {
    double alpha;
    int n;
    double ratio;
};

std::vector<SumRow> sum_table() {
    std::vector<SumRow> rows;
    for (double a : {0.5, 0.75, 1.0})
        for (int n : {50, 100, 200, 400}) rows.push_back({a, n, boltzmann_gibbs_sum(a, n) / n});
    return rows;
}

void sum_checks(ExperimentReport& r, const ExperimentConfig& cfg) {
    const auto rows = sum_table();
    Csv csv("alpha,n,sum,ratio");
    json table = json::array();
    std::map<double, std::vector<double>> ratios;
    for (const auto& row : rows) {
        csv << row.alpha << row.n << row.ratio * row.n << row.ratio;
        csv.end_row();
        table.push_back({{"alpha", row.alpha}, {"n", row.n}, {"ratio", row.ratio}});
        ratios[row.alpha].push_back(row.ratio);
    }
    for (double a : {0.75, 1.0}) {
        const auto& v = ratios[a];
        for (std::size_t i = 1; i < v.size(); ++i)
            if (!(v[i] < v[i - 1])) r.fail("S(alpha,N)/N not decreasing for alpha=" + format_double(a));
    }
    const auto& half = ratios[0.5];
    const auto [lo, hi] = std::minmax_element(half.begin(), half.end());
    const double spread = (*hi - *lo) / *lo;
    r.summary["half_alpha_relative_spread"] = spread;
    if (spread > 0.1) r.fail("S(1/2,N)/N varies by " + format_double(spread) + " (> 10%)");
    r.summary["sum_table"] = table;
    write_file(r, cfg, "fractional_sum.csv", csv.str());
}

}  // namespace

// ---------------------------------------------------------------------------
// beta

ExperimentReport run_beta(const ExperimentConfig& cfg) {
    auto r = start(cfg, "beta");
    const auto f = nonlinearity_by_name(cfg.nonlinearity);
    r.summary["nonlinearity"] = f.name;
    r.summary["quad_order"] = cfg.quad_order;
    std::optional<double> beta;
    try {
        beta = effective_beta(f, cfg.quad_order);
        r.summary["beta"] = *beta;
    } catch (const ConvergenceError& e) {
        r.summary["beta"] = nullptr;
        r.summary["beta_coarse"] = e.coarse();
        r.summary["beta_fine"] = e.fine();
        r.fail(e.what());
    }
    if (f.known_beta) {
        r.summary["known_beta"] = *f.known_beta;
        if (beta && std::abs(*beta - *f.known_beta) > 1e-8)
            r.fail("beta " + format_double(*beta) + " differs from the known value " + format_double(*f.known_beta));
    }
    const auto l2 = gaussian_l2_check(f, cfg.quad_order);
    r.summary["l2"] = {{"norm_f", l2.norm_f}, {"norm_fprime", l2.norm_fprime}, {"pass", l2.pass}};
    try {
        const auto h = hermite_coefficients(f, 6, cfg.quad_order);
        r.summary["hermite"] = {{"coefficients", h.coeffs}, {"tail_norm", h.tail_norm}};
    } catch (const ConvergenceError& e) {
        r.summary["hermite"] = nullptr;
    }
    return finish(std::move(r), cfg);
}

// ---------------------------------------------------------------------------
// simulate

ExperimentReport run_simulate(const ExperimentConfig& cfg) {
    auto r = start(cfg, "simulate");
    const auto f = nonlinearity_by_name(cfg.nonlinearity);
    const auto probes = probes_for(cfg);
    SimulationOptions opt;
    opt.ensemble = cfg.ensemble;
    opt.record_every = cfg.record_every;
    opt.workers = cfg.workers;
    const auto ens = simulate(cfg.sim, white_noise_law(cfg.sim), f, probes, opt);
    check_failure_rate(r, ens, "simulate");

    Csv csv("trajectory_id,time,probe_id,value");
    append_ensemble(csv, ens, {});
    write_file(r, cfg, "simulate.csv", csv.str());

    json moments = json::array();
    const std::size_t last = ens.times.size() - 1;
    for (std::size_t p = 0; p < probes.size(); ++p) {
        double s = 0.0, s2 = 0.0;
        std::size_t count = 0;
        for (const auto& t : ens.trajectories) {
            if (t.failed) continue;
            const double v = t.values[last * probes.size() + p];
            s += v;
            s2 += v * v;
            ++count;
        }
        const double mean = count ? s / static_cast<double>(count) : 0.0;
        const double var = count ? s2 / static_cast<double>(count) - mean * mean : 0.0;
        moments.push_back({{"probe", probes[p].name}, {"mean", mean}, {"variance", var}});
    }
    r.summary["final_time"] = ens.times[last];
    r.summary["final_probe_moments"] = moments;
    r.summary["failed_trajectories"] = ens.failures();
    r.summary["stability_bound"] = stability_bound(cfg.sim, f);
    return finish(std::move(r), cfg);
}

// ---------------------------------------------------------------------------
// she

TrajectoryEnsemble cole_hopf_ensemble(const SimulationConfig& sim, double beta, const TargetProfile& target,
                                      const ProbeFamily& probes, std::size_t ensemble, long record_every,
                                      unsigned workers, std::uint64_t stream_offset) {
    if (!(beta > 0.0)) throw std::invalid_argument("Cole-Hopf reference needs beta > 0");
    const std::size_t m = she_grid_size(sim.n, sim.dt);
    const GridField h0 = to_grid(target.coefficients(sim.n), m);
    const auto marks = record_steps(sim, record_every);
    TrajectoryEnsemble out;
    out.config = sim;
    out.nonlinearity = "cole_hopf";
    out.probe_count = probes.size();
    for (long s : marks) out.times.push_back(static_cast<double>(s) * sim.dt);
    out.trajectories.resize(ensemble);
    parallel_for(ensemble, workers ? workers : default_workers(), [&](std::size_t i) {
        Trajectory& traj = out.trajectories[i];
        traj.id = i;
        SheStepper stepper(m, sim.dt);
        SheState z = she_from_height(h0, beta);
        NoiseSource noise(sim.n, sim.seed, stream_offset + i);
        NoiseIncrement dw;
        std::size_t next = 0;
        try {
            for (long s = 0; s <= sim.steps(); ++s) {
                if (next < marks.size() && marks[next] == s) {
                    const auto u = derivative(from_grid(cole_hopf_height(z), sim.n));
                    const auto v = probes.pair(u);
                    traj.values.insert(traj.values.end(), v.begin(), v.end());
                    ++next;
                }
                if (s == sim.steps()) break;
                noise.next(sim.dt, dw);
                stepper.step(z, dw);
            }
        } catch (const PositivityLoss& e) {
            traj.failed = true;
            traj.failure = e.what();
        }
    });
    return out;
}

ComparisonRun she_comparison(const SimulationConfig& sim, double beta, double gap, std::size_t pairs,
                             double tolerance, unsigned workers) {
    if (!(beta > 0.0)) throw std::invalid_argument("comparison run needs beta > 0");
    if (!(gap >= 0.0)) throw std::invalid_argument("comparison gap must be nonnegative");
    const std::size_t m = she_grid_size(sim.n, sim.dt);
    struct PairResult {
        std::size_t violations = 0;
        double defect = -std::numeric_limits<double>::infinity();
        double excess = -std::numeric_limits<double>::infinity();
        bool positivity = false;
    };
    std::vector<PairResult> results(pairs);
    parallel_for(pairs, workers ? workers : default_workers(), [&](std::size_t i) {
        PairResult& res = results[i];
        RngStream init(sim.seed, i, Channel::initial);
        const GridField h1 = to_grid(sample_bridge(sim.n, init, BridgeNormalization::white_noise), m);
        const double amp = gap * (0.5 + 0.5 * init.uniform());
        const double shift = init.uniform();
        GridField h2 = h1;
        double initial_gap = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            const double x = static_cast<double>(j) / static_cast<double>(m);
            const double g = amp * 0.5 * (1.0 + std::cos(kTwoPi * (x - shift)));
            h2.values[j] += g;
            initial_gap = std::max(initial_gap, std::abs(h2.values[j] - h1.values[j]));
        }
        SheState z1 = she_from_height(h1, beta), z2 = she_from_height(h2, beta);
        SheStepper stepper(m, sim.dt);
        NoiseSource noise(sim.n, sim.seed, i);
        NoiseIncrement dw;
        try {
            for (long s = 0; s < sim.steps(); ++s) {
                noise.next(sim.dt, dw);
                stepper.step(z1, dw);
                stepper.step(z2, dw);
                double sup_gap = 0.0;
                for (std::size_t j = 0; j < m; ++j) {
                    const double a = z1.z.values[j], b = z2.z.values[j];
                    const double defect = (a - b) / b;
                    res.defect = std::max(res.defect, defect);
                    if (defect > tolerance) ++res.violations;
                    sup_gap = std::max(sup_gap, std::abs(std::log(b / a)) / beta);
                }
                res.excess = std::max(res.excess, sup_gap - initial_gap);
            }
        } catch (const PositivityLoss&) {
            res.positivity = true;
        }
    });
    ComparisonRun out;
    out.pairs = pairs;
    out.worst_order_defect = -std::numeric_limits<double>::infinity();
    out.max_tube_excess = -std::numeric_limits<double>::infinity();
    for (const auto& res : results) {
        out.order_violations += res.violations;
        out.worst_order_defect = std::max(out.worst_order_defect, res.defect);
        out.max_tube_excess = std::max(out.max_tube_excess, res.excess);
        out.positivity_failures += res.positivity ? 1 : 0;
    }
    return out;
}

ExperimentReport run_she(const ExperimentConfig& cfg) {
    auto r = start(cfg, "she");
    const auto& sim = cfg.sim;
    const std::size_t m = she_grid_size(sim.n, sim.dt);
    const auto marks = record_steps(sim, cfg.record_every);
    const std::size_t e = cfg.ensemble;
    std::vector<std::vector<double>> means(e);
    std::vector<char> failed(e, 0);
    parallel_for(e, cfg.workers ? cfg.workers : default_workers(), [&](std::size_t i) {
        SheStepper stepper(m, sim.dt);
        SheState z;
        z.z = GridField(m, 1.0);
        z.beta = cfg.beta;
        NoiseSource noise(sim.n, sim.seed, i);
        NoiseIncrement dw;
        std::size_t next = 0;
        try {
            for (long s = 0; s <= sim.steps(); ++s) {
                if (next < marks.size() && marks[next] == s) {
                    means[i].push_back(std::accumulate(z.z.values.begin(), z.z.values.end(), 0.0) /
                                       static_cast<double>(m));
                    ++next;
                }
                if (s == sim.steps()) break;
                noise.next(sim.dt, dw);
                stepper.step(z, dw);
            }
        } catch (const PositivityLoss&) {
            failed[i] = 1;
        }
    });
    Csv csv("trajectory_id,time,mean_z");
    for (std::size_t i = 0; i < e; ++i)
        for (std::size_t t = 0; t < means[i].size(); ++t) {
            csv << i << static_cast<double>(marks[t]) * sim.dt << means[i][t];
            csv.end_row();
        }
    write_file(r, cfg, "she.csv", csv.str());

    std::size_t ok = 0;
    double s = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < e; ++i) {
        if (failed[i]) continue;
        ++ok;
        s += means[i].back();
        s2 += means[i].back() * means[i].back();
    }
    const std::size_t failures = e - ok;
    r.summary["grid_size"] = m;
    r.summary["positivity_failures"] = failures;
    if (static_cast<double>(failures) > 0.01 * static_cast<double>(e))
        r.fail("positivity lost on " + std::to_string(failures) + " of " + std::to_string(e) + " trajectories");
    if (ok > 1) {
        const double mean = s / static_cast<double>(ok);
        const double var = std::max(0.0, s2 / static_cast<double>(ok) - mean * mean);
        const double se = std::sqrt(var / static_cast<double>(ok));
        r.summary["final_spatial_mean"] = mean;
        r.summary["final_standard_error"] = se;
        if (std::abs(mean - 1.0) > 3.0 * se + 1e-12)
            r.fail("ensemble mean of z is " + format_double(mean) + ", more than 3 standard errors from 1");
    }
    if (cfg.beta > 0.0) {
        const double tol = 1e-9;
        const auto cmp = she_comparison(sim, cfg.beta, 0.1, e, tol, cfg.workers);
        r.summary["comparison"] = {{"pairs", cmp.pairs},
                                   {"initial_gap", 0.1},
                                   {"order_violations", cmp.order_violations},
                                   {"worst_order_defect", cmp.worst_order_defect},
                                   {"max_tube_excess", cmp.max_tube_excess},
                                   {"positivity_failures", cmp.positivity_failures},
                                   {"tolerance", tol}};
        if (cmp.order_violations > 0) r.fail("comparison principle violated " + std::to_string(cmp.order_violations) + " times");
        if (cmp.max_tube_excess > tol) r.fail("coupled tube bound exceeds the initial gap");
        if (cmp.positivity_failures > 0) r.fail("positivity lost in coupled pairs");
    }
    return finish(std::move(r), cfg);
}

// ---------------------------------------------------------------------------
// sample-bridge

ExperimentReport run_sample_bridge(const ExperimentConfig& cfg) {
    auto r = start(cfg, "sample-bridge");
    ConditionedBridgeConfig bc;
    bc.eps = cfg.eps.front();
    bc.target = target_by_name(cfg.targets.front());
    bc.bridge_cutoff = cfg.bridge_cutoff ? cfg.bridge_cutoff : cfg.sim.n;
    bc.max_attempts = cfg.max_attempts;
    bc.normalization = bridge_normalization_from_string(cfg.bridge_normalization);
    bc.validate();
    Csv csv("sample_id,k,re,im");
    long attempts = 0;
    double worst = 0.0;
    std::size_t accepted = 0;
    for (std::size_t i = 0; i < cfg.ensemble; ++i) {
        RngStream rng(cfg.sim.seed, i, Channel::bridge);
        try {
            const auto s = sample_conditioned_bridge(bc, rng);
            attempts += s.attempts;
            ++accepted;
            worst = std::max(worst, tube_distance(bc, s.bridge));
            for (int k = 0; k <= s.bridge.cutoff(); ++k) {
                csv << i << k << s.bridge[k].real() << s.bridge[k].imag();
                csv.end_row();
            }
        } catch (const TubeTooUnlikely& e) {
            attempts += e.attempts();
            r.fail(e.what());
            break;
        }
    }
    write_file(r, cfg, "sample_bridge.csv", csv.str());
    r.summary["accepted"] = accepted;
    r.summary["attempts"] = attempts;
    r.summary["acceptance_estimate"] = attempts ? static_cast<double>(accepted) / static_cast<double>(attempts) : 0.0;
    r.summary["check_grid_points"] = bc.check_factor * bc.bridge_cutoff;
    r.summary["worst_tube_distance"] = worst;
    if (worst > bc.eps) r.fail("accepted sample leaves the tube");
    return finish(std::move(r), cfg);
}

// ---------------------------------------------------------------------------
// universality

UniversalityRun universality_ensemble(const SimulationConfig& sim, const NonlinearitySpec& f,
                                      const TargetProfile& target, double eps, const ExperimentConfig& cfg,
                                      const ProbeFamily& probes, std::uint64_t stream_offset) {
    ConditionedBridgeConfig bc;
    bc.eps = eps;
    bc.target = target;
    bc.bridge_cutoff = cfg.bridge_cutoff ? cfg.bridge_cutoff : sim.n;
    bc.max_attempts = cfg.max_attempts;
    bc.normalization = bridge_normalization_from_string(cfg.bridge_normalization);
    bc.validate();
    const std::size_t e = cfg.ensemble;
    const unsigned workers = cfg.workers ? cfg.workers : default_workers();

    std::vector<InitialState> starts(e);
    std::vector<long> attempts(e, 0);
    std::vector<std::string> errors(e);
    parallel_for(e, workers, [&](std::size_t i) {
        RngStream rng(sim.seed, i, Channel::bridge);
        try {
            const auto s = sample_conditioned_bridge(bc, rng);
            attempts[i] = s.attempts;
            const auto d = decompose_initial(target, s.bridge, sim.n);
            starts[i].pair = make_coupled_state(sim, d.h1_init, d.h2_init);
        } catch (const TubeTooUnlikely& ex) {
            errors[i] = ex.what();
        }
    });
    for (const auto& err : errors)
        if (!err.empty()) throw TubeTooUnlikely(err, cfg.max_attempts, 0.0);

    SimulationOptions opt;
    opt.model = Model::kpz_pair;
    opt.ensemble = e;
    opt.record_every = cfg.record_every;
    opt.workers = workers;
    opt.stream_offset = stream_offset;
    UniversalityRun run;
    run.ensemble = simulate(sim, [&](std::size_t i) { return starts[i]; }, f, probes, opt);
    run.mean_acceptance = static_cast<double>(e) / static_cast<double>(std::accumulate(attempts.begin(), attempts.end(), 0L));
    const double tol = scheme_tolerance(sim);
    for (const auto& t : run.ensemble.trajectories) {
        if (t.failed) continue;
        if (t.residual_max_sup > t.residual_initial_sup + tol) ++run.envelope_violations;
        run.max_initial_residual = std::max(run.max_initial_residual, t.residual_initial_sup);
        run.max_residual = std::max(run.max_residual, t.residual_max_sup);
    }
    return run;
}

KsComparison compare_final_laws(const TrajectoryEnsemble& a, const TrajectoryEnsemble& b, double level) {
    if (a.probe_count != b.probe_count) throw std::invalid_argument("compare_final_laws: probe families differ");
    KsComparison out;
    auto finals = [](const TrajectoryEnsemble& ens, std::size_t p) {
        std::vector<double> v;
        const std::size_t last = ens.times.size() - 1;
        for (const auto& t : ens.trajectories)
            if (!t.failed) v.push_back(t.values[last * ens.probe_count + p]);
        return v;
    };
    for (std::size_t p = 0; p < a.probe_count; ++p) {
        out.per_probe.push_back(ks_two_sample(finals(a, p), finals(b, p)));
        out.min_p = std::min(out.min_p, out.per_probe.back().p_value);
    }
    out.rejected = out.min_p < level / static_cast<double>(std::max<std::size_t>(a.probe_count, 1));
    return out;
}

ExperimentReport run_universality(const ExperimentConfig& cfg) {
    auto r = start(cfg, "universality");
    if (cfg.nonlinearities.size() < 2) throw ConfigError("universality needs at least two nonlinearities");
    std::vector<NonlinearitySpec> fs;
    std::vector<double> betas;
    for (const auto& name : cfg.nonlinearities) {
        fs.push_back(nonlinearity_by_name(name));
        try {
            betas.push_back(effective_beta(fs.back(), cfg.quad_order));
        } catch (const ConvergenceError& e) {
            throw ConfigError("universality: beta of " + name + " does not converge");
        }
    }
    std::vector<std::pair<std::size_t, std::size_t>> equal_pairs;
    for (std::size_t i = 0; i < fs.size(); ++i)
        for (std::size_t j = i + 1; j < fs.size(); ++j)
            if (std::abs(betas[i] - betas[j]) <= 1e-8) equal_pairs.emplace_back(i, j);
    if (equal_pairs.empty()) throw ConfigError("universality needs two nonlinearities with equal effective beta");
    r.summary["betas"] = betas;

    const auto probes = probes_for(cfg);
    const std::size_t e = cfg.ensemble;
    Csv envelope("n,eps,target,nonlinearity,trajectory_id,initial_sup,max_sup,failed");
    Csv ks("n,eps,target,first,second,probe_id,statistic,p_value");
    Csv laws("n,eps,target,source,trajectory_id,time,probe_id,value");
    json points = json::array();
    for (int n : cfg.n_list)
        for (double eps : cfg.eps)
            for (const auto& tname : cfg.targets) {
                const auto sim = with_n(cfg.sim, n);
                const auto target = target_by_name(tname);
                const std::vector<std::string> key{std::to_string(n), format_double(eps), tname};
                std::vector<UniversalityRun> runs;
                json point = {{"n", n}, {"eps", eps}, {"target", tname}, {"tolerance", scheme_tolerance(sim)}};
                for (std::size_t fi = 0; fi < fs.size(); ++fi) {
                    runs.push_back(universality_ensemble(sim, fs[fi], target, eps, cfg, probes, fi * e));
                    const auto& run = runs.back();
                    const std::string label = tname + "/N=" + std::to_string(n) + "/eps=" + format_double(eps) + "/" + fs[fi].name;
                    check_failure_rate(r, run.ensemble, label);
                    if (run.envelope_violations > 0)
                        r.fail(label + ": " + std::to_string(run.envelope_violations) + " residual envelope violations");
                    for (const auto& t : run.ensemble.trajectories) {
                        for (const auto& s : key) envelope << s;
                        envelope << fs[fi].name << t.id << t.residual_initial_sup << t.residual_max_sup
                                 << std::string(t.failed ? "1" : "0");
                        envelope.end_row();
                    }
                    auto prefix = key;
                    prefix.push_back(fs[fi].name);
                    append_ensemble(laws, run.ensemble, prefix);
                    point["runs"].push_back({{"nonlinearity", fs[fi].name},
                                             {"beta", betas[fi]},
                                             {"failed", run.ensemble.failures()},
                                             {"mean_acceptance", run.mean_acceptance},
                                             {"envelope_violations", run.envelope_violations},
                                             {"max_initial_residual_sup", run.max_initial_residual},
                                             {"residual_uniform_bound", run.max_residual}});
                }
                auto record_ks = [&](const std::string& a, const std::string& b, const KsComparison& c) {
                    for (std::size_t p = 0; p < c.per_probe.size(); ++p) {
                        for (const auto& s : key) ks << s;
                        ks << a << b << p << c.per_probe[p].statistic << c.per_probe[p].p_value;
                        ks.end_row();
                    }
                    point["ks"].push_back({{"first", a}, {"second", b}, {"min_p", c.min_p}, {"rejected", c.rejected}});
                    if (c.rejected)
                        r.fail("KS rejects equality of " + a + " and " + b + " laws (min p " + format_double(c.min_p) + ")");
                };
                std::vector<bool> in_group(fs.size(), false);
                for (auto [i, j] : equal_pairs) {
                    in_group[i] = in_group[j] = true;
                    record_ks(fs[i].name, fs[j].name, compare_final_laws(runs[i].ensemble, runs[j].ensemble, cfg.ks_level));
                }
                // One Cole-Hopf reference per distinct beta that has a partner.
                std::map<double, TrajectoryEnsemble> references;
                for (std::size_t i = 0; i < fs.size(); ++i) {
                    if (!in_group[i] || !(betas[i] > 0.0)) continue;
                    auto it = std::find_if(references.begin(), references.end(),
                                           [&](const auto& kv) { return std::abs(kv.first - betas[i]) <= 1e-8; });
                    if (it == references.end()) {
                        auto ref = cole_hopf_ensemble(sim, betas[i], target, probes, e, cfg.record_every, cfg.workers,
                                                      fs.size() * e + references.size() * e);
                        check_failure_rate(r, ref, "Cole-Hopf reference");
                        auto prefix = key;
                        prefix.push_back("cole_hopf_beta=" + format_double(betas[i]));
                        append_ensemble(laws, ref, prefix);
                        it = references.emplace(betas[i], std::move(ref)).first;
                    }
                    record_ks(fs[i].name, "cole_hopf", compare_final_laws(runs[i].ensemble, it->second, cfg.ks_level));
                }
                points.push_back(point);
            }
    r.summary["points"] = points;
    r.summary["ks_level"] = cfg.ks_level;
    r.summary["ks_correction"] = "bonferroni over probes";
    write_file(r, cfg, "universality_envelope.csv", envelope.str());
    write_file(r, cfg, "universality_ks.csv", ks.str());
    write_file(r, cfg, "universality_laws.csv", laws.str());
    return finish(std::move(r), cfg);
}

// ---------------------------------------------------------------------------
// ergodicity

ExperimentReport run_ergodicity(const ExperimentConfig& cfg) {
    auto r = start(cfg, "ergodicity");
    if (cfg.nonlinearity != "x2") throw ConfigError("ergodicity runs with nonlinearity x2");
    const auto f = nonlinearity_by_name("x2");
    const auto probes = probes_for(cfg);
    const auto target = target_by_name(cfg.targets.front());
    const unsigned workers = cfg.workers ? cfg.workers : default_workers();
    const std::size_t e = cfg.ensemble;
    Csv csv("n,eps,time,wasserstein_bound,surrogate_entropy");
    json reports = json::array();
    std::map<double, std::vector<double>> rates;
    for (double eps : cfg.eps)
        for (int n : cfg.n_list) {
            const auto sim = with_n(cfg.sim, n);
            const double tol = scheme_tolerance(sim);
            ConditionedBridgeConfig bc;
            bc.eps = eps;
            bc.target = target;
            bc.bridge_cutoff = cfg.bridge_cutoff ? cfg.bridge_cutoff : n;
            bc.max_attempts = cfg.max_attempts;
            bc.normalization = bridge_normalization_from_string(cfg.bridge_normalization);
            bc.validate();
            std::vector<SpectralField> bridges(e);
            std::vector<long> attempts(e, 0);
            std::vector<std::string> errors(e);
            parallel_for(e, workers, [&](std::size_t i) {
                RngStream rng(sim.seed, i, Channel::bridge);
                try {
                    auto s = sample_conditioned_bridge(bc, rng);
                    attempts[i] = s.attempts;
                    bridges[i] = derivative(with_cutoff(s.bridge, n));
                } catch (const TubeTooUnlikely& ex) {
                    errors[i] = ex.what();
                }
            });
            for (const auto& err : errors)
                if (!err.empty()) throw TubeTooUnlikely(err, cfg.max_attempts, 0.0);
            const SpectralField general = derivative(target.coefficients(n));

            SimulationOptions opt;
            opt.ensemble = e;
            opt.record_every = cfg.record_every;
            opt.workers = workers;
            const auto ens_general = simulate(sim, [&](std::size_t) { return InitialState{general, {}}; }, f, probes, opt);
            opt.record_modes = true;
            const auto ens_bridge = simulate(sim, [&](std::size_t i) { return InitialState{bridges[i], {}}; }, f, probes, opt);
            const std::string label = "N=" + std::to_string(n) + "/eps=" + format_double(eps);
            check_failure_rate(r, ens_general, label + " general start");
            check_failure_rate(r, ens_bridge, label + " bridge start");

            EntropyReport er;
            er.times = ens_bridge.times;
            std::vector<double> wass;
            for (std::size_t ti = 0; ti < er.times.size(); ++ti) {
                std::vector<std::vector<double>> a, b;
                for (std::size_t i = 0; i < e; ++i) {
                    const auto& ta = ens_general.trajectories[i];
                    const auto& tb = ens_bridge.trajectories[i];
                    if (ta.failed || tb.failed) continue;
                    const auto off = ti * probes.size();
                    a.emplace_back(ta.values.begin() + static_cast<long>(off), ta.values.begin() + static_cast<long>(off + probes.size()));
                    b.emplace_back(tb.values.begin() + static_cast<long>(off), tb.values.begin() + static_cast<long>(off + probes.size()));
                }
                wass.push_back(wasserstein_coupled_bound(a, b));
                std::vector<std::vector<Complex>> samples(static_cast<std::size_t>(n));
                for (const auto& t : ens_bridge.trajectories) {
                    if (t.failed) continue;
                    for (int k = 1; k <= n; ++k) samples[static_cast<std::size_t>(k - 1)].push_back(t.modes[ti][static_cast<std::size_t>(k)]);
                }
                // Modes the start leaves empty make the fitted law singular.
                const bool singular = std::any_of(samples.begin(), samples.end(), [](const auto& mode) {
                    return std::all_of(mode.begin(), mode.end(), [](Complex c) { return c == Complex{}; });
                });
                er.surrogate_entropy.push_back(singular ? std::numeric_limits<double>::infinity()
                                                        : gaussian_mode_kl(samples, 1.0));
                csv << n << eps << er.times[ti] << wass.back() << er.surrogate_entropy.back();
                csv.end_row();
            }
            const double worst_w = *std::max_element(wass.begin(), wass.end());
            if (worst_w > eps + tol)
                r.fail(label + ": Wasserstein bound " + format_double(worst_w) + " exceeds eps + tol");

            // Monotonicity and the fit use t >= 5 dt.
            std::vector<double> ft, fv;
            bool monotone = true;
            for (std::size_t ti = 0; ti < er.times.size(); ++ti) {
                if (er.times[ti] < 5.0 * sim.dt - 1e-15) continue;
                if (!fv.empty() && er.surrogate_entropy[ti] > fv.back()) monotone = false;
                ft.push_back(er.times[ti]);
                fv.push_back(er.surrogate_entropy[ti]);
            }
            if (!monotone) r.fail(label + ": surrogate entropy is not monotone after t = 5 dt");
            json rep = {{"n", n},
                        {"eps", eps},
                        {"label", "surrogate"},
                        {"tolerance", tol},
                        {"mean_acceptance", static_cast<double>(e) / static_cast<double>(std::accumulate(attempts.begin(), attempts.end(), 0L))},
                        {"times", er.times},
                        {"surrogate_entropy", er.surrogate_entropy},
                        {"wasserstein_bound", wass},
                        {"monotone", monotone}};
            if (ft.size() >= 4) {
                try {
                    const auto fit = fit_exponential_decay(ft, fv);
                    er.fitted_rate = fit.rate;
                    er.fit_residual = fit.residual;
                    er.relative_fit_residual = fit.relative_residual;
                    rep["fitted_rate"] = fit.rate;
                    rep["fit_residual"] = fit.residual;
                    rep["relative_fit_residual"] = fit.relative_residual;
                    rates[eps].push_back(fit.rate);
                    if (!(fit.rate > 0.0)) r.fail(label + ": fitted rate is not positive");
                    if (!(fit.relative_residual < 0.2)) r.fail(label + ": relative fit residual >= 0.2");
                } catch (const std::invalid_argument& ex) {
                    r.fail(label + ": decay fit failed: " + ex.what());
                }
            } else {
                r.fail(label + ": fewer than four recorded times after t = 5 dt");
            }
            reports.push_back(rep);
        }
    for (const auto& [eps, rs] : rates) {
        if (rs.size() < 2) continue;
        const auto [lo, hi] = std::minmax_element(rs.begin(), rs.end());
        if (*lo > 0.0 && *hi / *lo > 2.0)
            r.fail("eps=" + format_double(eps) + ": fitted rates vary by more than a factor 2 across N");
    }
    r.summary["reports"] = reports;
    write_file(r, cfg, "ergodicity.csv", csv.str());
    return finish(std::move(r), cfg);
}

// ---------------------------------------------------------------------------
// invariance and fractional

ExperimentReport run_invariance(const ExperimentConfig& cfg) {
    auto r = start(cfg, "invariance");
    Csv csv("alpha,time,k,mean_re,mean_im,second_moment");
    json table = json::array();
    invariance_check(r, cfg, cfg.sim.alpha, csv, table);
    r.summary["moments"] = table;
    write_file(r, cfg, "invariance.csv", csv.str());
    return finish(std::move(r), cfg);
}

ExperimentReport run_fractional(const ExperimentConfig& cfg) {
    auto r = start(cfg, "fractional");
    Csv csv("alpha,time,k,mean_re,mean_im,second_moment");
    json table = json::array();
    for (double a : cfg.alphas) invariance_check(r, cfg, a, csv, table);
    r.summary["moments"] = table;
    write_file(r, cfg, "fractional_invariance.csv", csv.str());
    sum_checks(r, cfg);
    return finish(std::move(r), cfg);
}

ExperimentReport run_fractional_sum(const ExperimentConfig& cfg) {
    auto r = start(cfg, "fractional-sum");
    sum_checks(r, cfg);
    return finish(std::move(r), cfg);
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
    const auto& x = cfg.experiment;
    if (x == "beta") return run_beta(cfg);
    if (x == "simulate") return run_simulate(cfg);
    if (x == "she") return run_she(cfg);
    if (x == "sample-bridge") return run_sample_bridge(cfg);
    if (x == "universality") return run_universality(cfg);
    if (x == "ergodicity") return run_ergodicity(cfg);
    if (x == "invariance") return run_invariance(cfg);
    if (x == "fractional-sum") return run_fractional_sum(cfg);
    throw ConfigError("unknown experiment: " + x);
}

}  // namespace kpz
