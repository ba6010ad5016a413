// Acceptance run: one PASS/FAIL line per criterion, exit status 0 only if all pass.
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>

#include "kpzlab/cole_hopf.hpp"
#include "kpzlab/experiments.hpp"
#include "kpzlab/measures.hpp"
#include "kpzlab/nonlinearity.hpp"

using namespace kpz;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string out_dir(const std::string& name) {
    const char* env = std::getenv("KPZLAB_ACCEPTANCE_DIR");
    const fs::path root = env && *env ? fs::path(env) : fs::temp_directory_path() / "kpzlab-acceptance";
    return (root / name).string();
}

std::string join(const std::vector<std::string>& items) {
    std::string s;
    for (const auto& i : items) s += (s.empty() ? "" : "; ") + i;
    return s;
}

Outcome beta_homogenization() {
    std::ostringstream d;
    bool pass = true;
    const double b2 = effective_beta(nonlinearity_by_name("x2"));
    pass &= std::abs(b2 - 1.0) <= 1e-10;
    const double babs = effective_beta(nonlinearity_by_name("abs"));
    const double closed = 0.5 * std::sqrt(2.0 / kPi);
    pass &= std::abs(babs - closed) <= 1e-6;
    // Monte Carlo oracle of E |X| (X^2 - 1) / 2.
    std::mt19937_64 eng(20240601);
    std::normal_distribution<double> nd;
    const long draws = 10000000;
    double s = 0.0, s2 = 0.0;
    for (long i = 0; i < draws; ++i) {
        const double x = nd(eng);
        const double v = 0.5 * std::abs(x) * (x * x - 1.0);
        s += v;
        s2 += v * v;
    }
    const double mc = s / draws, se = std::sqrt((s2 / draws - mc * mc) / draws);
    pass &= std::abs(babs - mc) <= 3.0 * se;
    double worst_shift = 0.0;
    for (const char* name : {"x2", "abs", "abs_smooth"}) {
        const auto f = nonlinearity_by_name(name);
        const auto g = linear_combination(1.0, f, 0.1, nonlinearity_by_name("x3"));
        worst_shift = std::max(worst_shift, std::abs(effective_beta(g) - effective_beta(f)));
    }
    pass &= worst_shift <= 1e-10;
    d << "beta(x2)-1=" << b2 - 1.0 << " |beta(abs)-closed|=" << std::abs(babs - closed)
      << " |beta(abs)-MC|/se=" << std::abs(babs - mc) / se << " cubic shift=" << worst_shift;
    return {pass, d.str()};
}

Outcome white_noise_invariance() {
    ExperimentConfig cfg;
    cfg.experiment = "invariance";
    cfg.sim.n = 16;
    cfg.sim.dt = 1e-4;
    cfg.sim.horizon = 0.5;
    cfg.ensemble = 10000;
    cfg.record_every = 500;
    cfg.nonlinearity = "x2";
    cfg.output_dir = out_dir("invariance");
    const auto r = run_invariance(cfg);
    const auto& m = r.summary["moments"][0];
    std::ostringstream d;
    d << "worst mean " << m["worst_mean"].get<double>() << " (bound " << m["mean_bound"].get<double>()
      << "), worst second-moment deviation " << m["worst_second_moment_deviation"].get<double>() << " (bound "
      << m["second_moment_bound"].get<double>() << ")";
    if (!r.passed) d << "; " << join(r.failures);
    return {r.passed, d.str()};
}

Outcome maximum_principle() {
    ExperimentConfig cfg;
    cfg.sim.n = 16;
    cfg.sim.dt = 1e-4;
    cfg.sim.horizon = 0.25;
    cfg.ensemble = 125;
    const auto probes = probes_for(cfg);
    std::size_t total = 0, violations = 0, failed = 0;
    double worst_growth = -std::numeric_limits<double>::infinity();
    std::uint64_t offset = 0;
    for (const auto& tname : target_battery())
        for (const char* fname : {"x2", "abs_smooth"}) {
            const auto run = universality_ensemble(cfg.sim, nonlinearity_by_name(fname), target_by_name(tname), 0.5, cfg,
                                                   probes, offset);
            offset += cfg.ensemble;
            violations += run.envelope_violations;
            failed += run.ensemble.failures();
            total += run.ensemble.trajectories.size();
            for (const auto& t : run.ensemble.trajectories)
                if (!t.failed) worst_growth = std::max(worst_growth, t.residual_max_sup - t.residual_initial_sup);
        }
    std::ostringstream d;
    d << total << " trajectories, " << violations << " violations, " << failed << " failed, max growth of sup|h2| "
      << worst_growth << " (tol " << scheme_tolerance(cfg.sim) << ")";
    return {total == 1000 && violations == 0 && failed == 0, d.str()};
}

Outcome comparison_principle() {
    SimulationConfig sim;
    sim.n = 16;
    sim.dt = 1e-4;
    sim.horizon = 0.1;
    sim.seed = 4;
    const double tol = scheme_tolerance(sim);
    const auto run = she_comparison(sim, 1.0, 0.1, 1000, 1e-9, 0);
    std::ostringstream d;
    d << run.pairs << " pairs, " << run.order_violations << " order violations (worst defect " << run.worst_order_defect
      << "), max tube excess " << run.max_tube_excess << " (tol " << tol << "), " << run.positivity_failures
      << " positivity failures";
    const bool pass = run.pairs == 1000 && run.order_violations == 0 && run.positivity_failures == 0 &&
                      run.max_tube_excess <= tol;
    return {pass, d.str()};
}

Outcome ergodicity() {
    ExperimentConfig cfg;
    cfg.experiment = "ergodicity";
    cfg.sim.dt = 1e-4;
    cfg.sim.horizon = 0.01;
    cfg.ensemble = 20000;
    cfg.record_every = 10;
    cfg.eps = {0.25, 0.5};
    cfg.n_list = {8, 16, 32};
    cfg.targets = {"sine"};
    cfg.bridge_cutoff = 8;
    cfg.output_dir = out_dir("ergodicity");
    const auto r = run_ergodicity(cfg);
    std::ostringstream d;
    for (const auto& rep : r.summary["reports"]) {
        const auto& w = rep["wasserstein_bound"];
        double worst = 0.0;
        for (const auto& v : w) worst = std::max(worst, v.get<double>());
        d << "[N=" << rep["n"].get<int>() << " eps=" << rep["eps"].get<double>() << " W<=" << worst
          << " C=" << rep.value("fitted_rate", 0.0) << " rel.res=" << rep.value("relative_fit_residual", 0.0)
          << (rep["monotone"].get<bool>() ? "" : " non-monotone") << "] ";
    }
    if (!r.passed) d << join(r.failures);
    return {r.passed, d.str()};
}

Outcome entropy_toolkit() {
    std::mt19937_64 eng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto measure = [&](std::size_t n) {
        std::vector<double> w(n);
        for (double& x : w) x = u(eng) < 0.15 ? 0.0 : u(eng);
        w[std::uniform_int_distribution<std::size_t>(0, n - 1)(eng)] += 0.1;
        return FiniteMeasure::normalized(w);
    };
    std::size_t ineq_fail = 0, contr_fail = 0, oracle_fail = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        const std::size_t n = 2 + trial % 7;
        const auto p = measure(n), q = measure(n);
        std::vector<std::size_t> event;
        for (std::size_t i = 0; i < n; ++i)
            if (u(eng) < 0.5) event.push_back(i);
        if (event.empty() || !(q.mass(event) > 0.0)) event = {static_cast<std::size_t>(std::max_element(q.weights().begin(), q.weights().end()) - q.weights().begin())};
        const auto r = entropy_inequality_bound(p, q, event);
        if (!r.holds) ++ineq_fail;
        // Brute-force oracle of both sides.
        double h = 0.0, lhs = 0.0, qe = 0.0;
        bool singular = false;
        for (std::size_t i = 0; i < n; ++i) {
            if (p[i] > 0.0 && q[i] == 0.0) singular = true;
            if (p[i] > 0.0 && q[i] > 0.0) h += p[i] * std::log(p[i] / q[i]);
        }
        for (std::size_t i : event) {
            lhs += p[i];
            qe += q[i];
        }
        const double rhs = singular ? std::numeric_limits<double>::infinity() : (std::log(2.0) + h) / std::log(1.0 + 1.0 / qe);
        if (std::abs(r.lhs - lhs) > 1e-12 || !(lhs <= rhs) || (std::isfinite(rhs) && std::abs(r.rhs - rhs) > 1e-9 * rhs))
            ++oracle_fail;

        const std::size_t m = 1 + trial % 4;
        std::vector<std::size_t> map(n);
        for (auto& v : map) v = std::uniform_int_distribution<std::size_t>(0, m - 1)(eng);
        const auto c = contraction_check(p, q, map, m);
        // Oracle: image entropy from summed weights.
        std::vector<double> pw(m, 0.0), qw(m, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            pw[map[i]] += p[i];
            qw[map[i]] += q[i];
        }
        double himg = 0.0;
        bool img_singular = false;
        for (std::size_t j = 0; j < m; ++j) {
            if (pw[j] > 0.0 && qw[j] == 0.0) img_singular = true;
            if (pw[j] > 0.0 && qw[j] > 0.0) himg += pw[j] * std::log(pw[j] / qw[j]);
        }
        if (!c.holds || (!img_singular && !singular && himg > h + 1e-12)) ++contr_fail;
    }
    std::size_t chain_fail = 0;
    double worst_gap = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        TransitionKernel k(4);
        for (auto& row : k) row = measure(4).weights();
        const auto p = measure(4), q = measure(4);
        const double h0 = relative_entropy(p, q);
        for (int m = 1; m <= 3; ++m) {
            const double hm = relative_entropy(path_law(p, k, m), path_law(q, k, m));
            if (std::isinf(h0) != std::isinf(hm)) {
                ++chain_fail;
                continue;
            }
            if (std::isfinite(h0)) {
                const double gap = std::abs(hm - h0);
                worst_gap = std::max(worst_gap, gap);
                if (gap > 1e-12 + 1e-10 * h0) ++chain_fail;
            }
        }
    }
    std::ostringstream d;
    d << "entropy inequality failures " << ineq_fail << "/10000 (oracle mismatches " << oracle_fail
      << "), contraction failures " << contr_fail << "/10000, chain identity failures " << chain_fail
      << "/600 (worst gap " << worst_gap << ")";
    return {ineq_fail == 0 && oracle_fail == 0 && contr_fail == 0 && chain_fail == 0, d.str()};
}

Outcome universality_collapse() {
    ExperimentConfig cfg;
    cfg.experiment = "universality";
    cfg.sim.n = 16;
    cfg.sim.dt = 1e-4;
    cfg.sim.horizon = 0.25;
    cfg.ensemble = 2000;
    cfg.nonlinearities = {"x2", "x2_plus_0.1x3"};
    cfg.targets = {"sine"};
    cfg.eps = {0.5};
    cfg.n_list = {16};
    cfg.ks_level = 0.01;
    cfg.output_dir = out_dir("universality");
    const auto r = run_universality(cfg);
    bool pass = true;
    std::size_t tests = 0;
    std::ostringstream d;
    for (const auto& point : r.summary["points"])
        for (const auto& ks : point["ks"]) {
            ++tests;
            pass &= !ks["rejected"].get<bool>();
            d << ks["first"].get<std::string>() << " vs " << ks["second"].get<std::string>() << ": min p "
              << ks["min_p"].get<double>() << (ks["rejected"].get<bool>() ? " (rejected)" : "") << "; ";
        }
    d << "reject below " << cfg.ks_level / static_cast<double>(probes_for(cfg).size()) << " (Bonferroni over probes)";
    // One pair with equal beta and one Cole-Hopf comparison for each member.
    return {pass && tests == 3, d.str()};
}

Outcome fractional_sum() {
    std::ostringstream d;
    bool pass = true;
    for (double a : {0.5, 0.75, 1.0}) {
        std::vector<double> ratios;
        for (int n : {50, 100, 200, 400}) ratios.push_back(boltzmann_gibbs_sum(a, n) / n);
        d << "alpha=" << a << ":";
        for (double v : ratios) d << ' ' << v;
        d << "; ";
        if (a == 0.5) {
            const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
            pass &= (*hi - *lo) / *lo <= 0.1;
        } else {
            for (std::size_t i = 1; i < ratios.size(); ++i) pass &= ratios[i] < ratios[i - 1];
        }
    }
    return {pass, d.str()};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"beta homogenization", beta_homogenization},
        {"white-noise invariance", white_noise_invariance},
        {"maximum principle", maximum_principle},
        {"comparison principle", comparison_principle},
        {"ergodicity", ergodicity},
        {"relative entropy toolkit", entropy_toolkit},
        {"universality collapse", universality_collapse},
        {"fractional sum", fractional_sum},
    };
    bool all = true;
    int index = 1;
    for (const auto& [name, check] : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        all &= o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << " [" << index++ << "] " << name << " (" << std::fixed
                  << std::setprecision(1) << secs << " s): " << std::defaultfloat << std::setprecision(6) << o.detail
                  << std::endl;
    }
    return all ? 0 : 1;
}
