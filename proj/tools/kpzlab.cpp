// kpzlab command line front end: one subcommand per experiment.
#include <cstdlib>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "kpzlab/experiments.hpp"

namespace {

struct Flags {
    std::string config_file;
    std::optional<int> n, quad_order, k;
    std::optional<double> dt, horizon, alpha, beta;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> ensemble;
    std::optional<long> record_every, attempts;
    std::optional<unsigned> workers;
    std::optional<std::string> nonlinearity, probes, out, target, normalization;
    std::vector<std::string> nonlinearities, targets;
    std::vector<double> eps, alphas;
    std::vector<int> n_list;
    bool with_invariance = false;
};

void add_common(CLI::App* app, Flags& f) {
    app->add_option("--config", f.config_file, "Config file (key = value); flags override its values");
    app->add_option("--out", f.out, "Output directory");
    app->add_option("--seed", f.seed, "Master seed");
    app->add_option("--workers", f.workers, "Worker threads (0: all cores)");
}

void add_sim(CLI::App* app, Flags& f) {
    app->add_option("--n", f.n, "Fourier cutoff N");
    app->add_option("--dt", f.dt, "Time step");
    app->add_option("--horizon", f.horizon, "Final time");
    app->add_option("--ensemble", f.ensemble, "Ensemble size");
    app->add_option("--record-every", f.record_every, "Steps between records (0: endpoints)");
}

kpz::ExperimentConfig build(const std::string& name, const Flags& f) {
    kpz::ExperimentConfig cfg = f.config_file.empty() ? kpz::ExperimentConfig{} : kpz::load_config(f.config_file);
    cfg.experiment = name;
    if (f.n) cfg.sim.n = *f.n;
    if (f.dt) cfg.sim.dt = *f.dt;
    if (f.horizon) cfg.sim.horizon = *f.horizon;
    if (f.alpha) cfg.sim.alpha = *f.alpha;
    if (f.seed) cfg.sim.seed = *f.seed;
    if (f.ensemble) cfg.ensemble = *f.ensemble;
    if (f.record_every) cfg.record_every = *f.record_every;
    if (f.workers) cfg.workers = *f.workers;
    if (f.quad_order) cfg.quad_order = *f.quad_order;
    if (f.beta) cfg.beta = *f.beta;
    if (f.k) cfg.bridge_cutoff = *f.k;
    if (f.attempts) cfg.max_attempts = *f.attempts;
    if (f.nonlinearity) cfg.nonlinearity = *f.nonlinearity;
    if (f.probes) cfg.probes_file = *f.probes;
    if (f.target) cfg.targets = {*f.target};
    if (f.normalization) cfg.bridge_normalization = *f.normalization;
    if (!f.nonlinearities.empty()) cfg.nonlinearities = f.nonlinearities;
    if (!f.targets.empty()) cfg.targets = f.targets;
    if (!f.eps.empty()) cfg.eps = f.eps;
    if (!f.alphas.empty()) cfg.alphas = f.alphas;
    if (!f.n_list.empty()) cfg.n_list = f.n_list;
    // Precedence for the output directory: --out, then the environment, then the file.
    if (const char* env = std::getenv("KPZLAB_OUTPUT_DIR"); env && *env) cfg.output_dir = env;
    if (f.out) cfg.output_dir = *f.out;
    // Single-N subcommands accept --n as the N list too.
    if (f.n && f.n_list.empty()) cfg.n_list = {*f.n};
    cfg.validate();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fourier-regularized KPZ / stochastic Burgers experiments"};
    app.require_subcommand(1);
    Flags f;

    auto* beta = app.add_subcommand("beta", "Effective beta and Gaussian L2 report of a nonlinearity");
    add_common(beta, f);
    beta->add_option("--nonlinearity", f.nonlinearity, "Nonlinearity name");
    beta->add_option("--quad-order", f.quad_order, "Half-range quadrature order");

    auto* sim = app.add_subcommand("simulate", "Burgers ensemble from the invariant law");
    add_common(sim, f);
    add_sim(sim, f);
    sim->add_option("--alpha", f.alpha, "Dissipation exponent in (1/2, 1]");
    sim->add_option("--nonlinearity", f.nonlinearity, "Nonlinearity name");
    sim->add_option("--probes", f.probes, "Probe file (default dictionary if absent)");

    auto* she = app.add_subcommand("she", "Stochastic heat equation: mean and comparison checks");
    add_common(she, f);
    add_sim(she, f);
    she->add_option("--beta", f.beta, "Coupling beta");

    auto* bridge = app.add_subcommand("sample-bridge", "Brownian bridges conditioned on a tube");
    add_common(bridge, f);
    bridge->add_option("--k", f.k, "Bridge cutoff K");
    bridge->add_option("--eps", f.eps, "Tube width");
    bridge->add_option("--target", f.target, "Target profile");
    bridge->add_option("--attempts", f.attempts, "Maximum attempts per sample");
    bridge->add_option("--ensemble", f.ensemble, "Number of samples");
    bridge->add_option("--normalization", f.normalization, "white_noise or unit_modes");

    auto* uni = app.add_subcommand("universality", "Coupled pair ensembles across nonlinearities");
    add_common(uni, f);
    add_sim(uni, f);
    uni->add_option("--nonlinearities", f.nonlinearities, "Nonlinearities to compare")->delimiter(',');
    uni->add_option("--targets", f.targets, "Target profiles")->delimiter(',');
    uni->add_option("--eps", f.eps, "Tube widths")->delimiter(',');
    uni->add_option("--n-list", f.n_list, "Cutoffs")->delimiter(',');
    uni->add_option("--attempts", f.attempts, "Maximum bridge attempts per sample");

    auto* erg = app.add_subcommand("ergodicity", "Coupled Burgers runs and the surrogate entropy decay");
    add_common(erg, f);
    add_sim(erg, f);
    erg->add_option("--eps", f.eps, "Tube widths")->delimiter(',');
    erg->add_option("--target", f.target, "Target profile");
    erg->add_option("--n-list", f.n_list, "Cutoffs")->delimiter(',');
    erg->add_option("--attempts", f.attempts, "Maximum bridge attempts per sample");

    auto* inv = app.add_subcommand("invariance", "Per-mode moments under the white-noise start");
    add_common(inv, f);
    add_sim(inv, f);
    inv->add_option("--alpha", f.alpha, "Dissipation exponent in (1/2, 1]");
    inv->add_option("--nonlinearity", f.nonlinearity, "Nonlinearity name");

    auto* frac = app.add_subcommand("fractional-sum", "S(alpha, N)/N table");
    add_common(frac, f);
    add_sim(frac, f);
    frac->add_flag("--with-invariance", f.with_invariance, "Also run the invariance test for every --alphas value");
    frac->add_option("--alphas", f.alphas, "Exponents for the invariance runs")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        const std::string name = app.get_subcommands().front()->get_name();
        const auto cfg = build(name, f);
        const auto report = name == "fractional-sum" && f.with_invariance ? kpz::run_fractional(cfg) : kpz::run_experiment(cfg);
        std::cout << report.summary.dump(2) << '\n';
        for (const auto& why : report.failures) std::cerr << "FAILED: " << why << '\n';
        return report.passed ? 0 : 1;
    } catch (const kpz::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
