#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <limits>
#include <random>

#include "kpzlab/measures.hpp"
#include "kpzlab/rng.hpp"

using namespace kpz;
using Catch::Approx;

namespace {

FiniteMeasure random_measure(std::mt19937_64& eng, std::size_t n, double zero_prob = 0.0) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> w(n);
    for (double& x : w) x = u(eng) < zero_prob ? 0.0 : u(eng);
    if (std::all_of(w.begin(), w.end(), [](double x) { return x == 0.0; })) w[0] = 1.0;
    return FiniteMeasure::normalized(w);
}

TransitionKernel random_kernel(std::mt19937_64& eng, std::size_t n) {
    TransitionKernel k(n);
    for (auto& row : k) {
        const auto m = random_measure(eng, n);
        row = m.weights();
    }
    return k;
}

}  // namespace

TEST_CASE("finite measures validate their weights") {
    CHECK_THROWS_AS(FiniteMeasure({0.5, 0.6}), std::invalid_argument);
    CHECK_THROWS_AS(FiniteMeasure({1.5, -0.5}), std::invalid_argument);
    CHECK_THROWS_AS(FiniteMeasure::normalized({0.0, 0.0}), std::invalid_argument);
    const auto m = FiniteMeasure::normalized({1.0, 3.0});
    CHECK(m[1] == Approx(0.75));
    CHECK(m.mass({0, 1}) == Approx(1.0));
}

TEST_CASE("relative entropy examples") {
    const FiniteMeasure p1({0.9, 0.1}), p2({0.5, 0.5});
    CHECK(relative_entropy(p1, p1) == 0.0);
    CHECK(relative_entropy(p1, p2) == Approx(0.9 * std::log(1.8) + 0.1 * std::log(0.2)).epsilon(1e-14));
    CHECK(relative_entropy(p1, p2) == Approx(0.368064).margin(1e-6));
    CHECK(std::isinf(relative_entropy(FiniteMeasure({1.0, 0.0}), FiniteMeasure({0.0, 1.0}))));
    CHECK_THROWS_AS(relative_entropy(p1, FiniteMeasure({1.0})), std::invalid_argument);
}

TEST_CASE("relative entropy is positive away from the diagonal") {
    std::mt19937_64 eng(1);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto p = random_measure(eng, 5), q = random_measure(eng, 5);
        CHECK(relative_entropy(p, q) > 1e-10);
        CHECK(relative_entropy(q, q) <= 1e-10);
    }
}

TEST_CASE("entropy inequality examples") {
    const FiniteMeasure p1({0.9, 0.1}), p2({0.5, 0.5});
    const auto r = entropy_inequality_bound(p1, p2, {1});
    CHECK(r.lhs == Approx(0.1));
    CHECK(r.rhs == Approx((std::log(2.0) + 0.368064) / std::log(3.0)).margin(1e-6));
    CHECK(r.rhs == Approx(0.96596).margin(1e-5));
    CHECK(r.holds);
    const auto full = entropy_inequality_bound(p1, p2, {0, 1});
    CHECK(full.lhs == Approx(1.0));
    CHECK(full.holds == (full.rhs >= 1.0));
    CHECK_THROWS_AS(entropy_inequality_bound(FiniteMeasure({1.0, 0.0}), FiniteMeasure({1.0, 0.0}), {1}),
                    std::invalid_argument);
}

TEST_CASE("entropy inequality holds on every event of random six-point measures") {
    std::mt19937_64 eng(2);
    for (int trial = 0; trial < 200; ++trial) {
        const auto p = random_measure(eng, 6, 0.2);
        const auto q = trial % 2 == 0 ? p : random_measure(eng, 6, 0.2);
        for (unsigned mask = 1; mask < 64; ++mask) {
            std::vector<std::size_t> event;
            for (std::size_t i = 0; i < 6; ++i)
                if (mask & (1u << i)) event.push_back(i);
            if (!(q.mass(event) > 0.0)) continue;
            const auto r = entropy_inequality_bound(p, q, event);
            // Oracle evaluated directly from the weights.
            double h = 0.0, lhs = 0.0;
            bool singular = false;
            for (std::size_t i = 0; i < 6; ++i) {
                if (p[i] > 0.0 && q[i] == 0.0) singular = true;
                if (p[i] > 0.0 && q[i] > 0.0) h += p[i] * std::log(p[i] / q[i]);
            }
            for (std::size_t i : event) lhs += p[i];
            const double rhs = singular ? std::numeric_limits<double>::infinity()
                                        : (std::log(2.0) + h) / std::log(1.0 + 1.0 / q.mass(event));
            CHECK(r.lhs == Approx(lhs).margin(1e-14));
            if (std::isfinite(rhs)) CHECK(r.rhs == Approx(rhs).epsilon(1e-10));
            CHECK(r.holds);
        }
    }
}

TEST_CASE("contraction principle") {
    std::mt19937_64 eng(3);
    const auto p = random_measure(eng, 8), q = random_measure(eng, 8);
    std::vector<std::size_t> identity(8), constant(8, 0);
    std::iota(identity.begin(), identity.end(), 0);
    const auto id = contraction_check(p, q, identity, 8);
    CHECK(id.image_entropy == Approx(id.source_entropy).epsilon(1e-12));
    CHECK(contraction_check(p, q, constant, 1).image_entropy == 0.0);
    std::uniform_int_distribution<std::size_t> pick(0, 3);
    for (int trial = 0; trial < 10000; ++trial) {
        const auto a = random_measure(eng, 8, 0.1), b = random_measure(eng, 8, 0.1);
        std::vector<std::size_t> map(8);
        for (auto& m : map) m = pick(eng);
        const auto r = contraction_check(a, b, map, 4);
        REQUIRE(r.holds);
    }
    CHECK_THROWS_AS(pushforward(p, {0, 1}, 2), std::invalid_argument);
}

TEST_CASE("path laws of a shared kernel keep the initial entropy") {
    std::mt19937_64 eng(4);
    for (int trial = 0; trial < 50; ++trial) {
        const auto kernel = random_kernel(eng, 4);
        const auto p = random_measure(eng, 4), q = random_measure(eng, 4);
        for (int m = 0; m <= 3; ++m) {
            const auto lp = path_law(p, kernel, m), lq = path_law(q, kernel, m);
            CHECK(lp.size() == static_cast<std::size_t>(std::pow(4, m + 1)));
            CHECK(relative_entropy(lp, lq) == Approx(relative_entropy(p, q)).epsilon(1e-10).margin(1e-14));
        }
    }
    // Marginal check of the indexing: paths with first digit i carry mass p_i.
    const auto kernel = random_kernel(eng, 4);
    const auto p = random_measure(eng, 4);
    const auto law = path_law(p, kernel, 2);
    for (std::size_t i = 0; i < 4; ++i) {
        double mass = 0.0;
        for (std::size_t rest = 0; rest < 16; ++rest) mass += law[i * 16 + rest];
        CHECK(mass == Approx(p[i]).epsilon(1e-12));
    }
}

TEST_CASE("Gaussian mode KL") {
    CHECK(gaussian_kl_from_variances({1.0, 1.0, 1.0}, 1.0) == 0.0);
    CHECK(gaussian_kl_from_variances({2.0}, 1.0) == Approx(0.5 * (1.0 - std::log(2.0))).epsilon(1e-14));
    CHECK(gaussian_kl_from_variances({2.0}, 1.0) == Approx(0.153426).margin(1e-6));
    CHECK_THROWS_AS(gaussian_kl_from_variances({0.0}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(gaussian_mode_kl({std::vector<Complex>(10)}, 1.0), std::invalid_argument);
}

TEST_CASE("Gaussian mode KL of reference samples shrinks with the sample size") {
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t e : {100u, 1000u, 10000u}) {
        // Average over repetitions to compare expectations, not single draws.
        double mean = 0.0;
        const int reps = 20;
        for (int r = 0; r < reps; ++r) {
            RngStream rng(5, e * 100 + static_cast<std::size_t>(r), Channel::auxiliary);
            std::vector<std::vector<Complex>> modes(8, std::vector<Complex>(e));
            for (auto& mode : modes)
                for (auto& z : mode) z = Complex(rng.normal(), rng.normal()) / std::sqrt(2.0);
            mean += gaussian_mode_kl(modes, 1.0) / reps;
        }
        CHECK(mean < prev);
        prev = mean;
    }
    CHECK(prev < 1e-3);
}

TEST_CASE("one-coupling Wasserstein bound") {
    std::vector<std::vector<double>> a{{0.1, 0.2}, {0.5, -0.3}};
    CHECK(wasserstein_coupled_bound(a, a) == 0.0);
    CHECK(brute_force_wasserstein(a, a) == 0.0);
    std::mt19937_64 eng(6);
    std::normal_distribution<double> nd;
    for (std::size_t size = 1; size <= 6; ++size)
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<std::vector<double>> x(size, std::vector<double>(3)), y = x;
            for (auto& v : x)
                for (double& c : v) c = nd(eng);
            for (auto& v : y)
                for (double& c : v) c = nd(eng);
            const double coupled = wasserstein_coupled_bound(x, y);
            const double exact = brute_force_wasserstein(x, y);
            CHECK(coupled >= exact - 1e-15);
            if (size == 1) CHECK(coupled == exact);
            // Swapping the second ensemble leaves the exact distance unchanged.
            std::reverse(y.begin(), y.end());
            CHECK(brute_force_wasserstein(x, y) == Approx(exact).epsilon(1e-12));
        }
    CHECK_THROWS_AS(brute_force_wasserstein(std::vector<std::vector<double>>(9, {0.0}),
                                            std::vector<std::vector<double>>(9, {0.0})),
                    std::invalid_argument);
}

TEST_CASE("gradient perturbations move probe pairings by at most eps") {
    const auto probes = ProbeFamily::default_dictionary();
    for (const auto& p : probes.probes()) CHECK(std::max(p.sup_norm, p.derivative_sup) <= 1.0 + 1e-12);
    std::mt19937_64 eng(7);
    std::normal_distribution<double> nd;
    const double eps = 0.3;
    for (int trial = 0; trial < 50; ++trial) {
        SpectralField u(16, true), g(16, true);
        for (int k = 1; k <= 16; ++k) {
            u.set(k, {nd(eng), nd(eng)});
            g.set(k, Complex(nd(eng), nd(eng)) / double(k * k));
        }
        // Scale g so that sup |g| = eps on a fine grid.
        const double sup = to_grid(g, 1024).sup_norm();
        g *= eps / sup;
        const auto u2 = u + derivative(g);
        const auto a = probes.pair(u), b = probes.pair(u2);
        CHECK(wasserstein_coupled_bound({a}, {b}) <= eps * (1.0 + 1e-6));
    }
}

TEST_CASE("exponential decay fit") {
    std::vector<double> t, v;
    for (int i = 0; i < 10; ++i) {
        t.push_back(0.1 * i);
        v.push_back(std::exp(-2.0 * 0.1 * i));
    }
    auto fit = fit_exponential_decay(t, v);
    CHECK(fit.rate == Approx(2.0).epsilon(1e-12));
    CHECK(fit.residual < 1e-12);
    fit = fit_exponential_decay(t, std::vector<double>(10, 3.0));
    CHECK(fit.rate == Approx(0.0).margin(1e-14));
    CHECK(fit.relative_residual == 0.0);
    std::mt19937_64 eng(8);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> noisy;
        for (double x : t) noisy.push_back(std::exp(-3.0 * x) * (1.0 + 0.01 * nd(eng)));
        CHECK(std::abs(fit_exponential_decay(t, noisy).rate - 3.0) < 0.05);
    }
    CHECK_THROWS_AS(fit_exponential_decay({0, 1, 2}, {1, 1, 1}), std::invalid_argument);
    CHECK_THROWS_AS(fit_exponential_decay({0, 1, 2, 3}, {1, 0, 1, 1}), std::invalid_argument);
}

TEST_CASE("two-sample KS test") {
    std::mt19937_64 eng(9);
    std::normal_distribution<double> nd;
    std::vector<double> a(2000), b(2000), c(2000);
    for (auto& x : a) x = nd(eng);
    for (auto& x : b) x = nd(eng);
    for (auto& x : c) x = nd(eng) + 0.3;
    CHECK(ks_two_sample(a, a).statistic == 0.0);
    CHECK(ks_two_sample(a, b).p_value > 0.01);
    CHECK(ks_two_sample(a, c).p_value < 1e-6);
    // Oracle statistic by evaluating both empirical CDFs at every sample point.
    std::vector<double> small_a(a.begin(), a.begin() + 50), small_b(c.begin(), c.begin() + 70);
    double d = 0.0;
    for (const auto* s : {&small_a, &small_b})
        for (double x : *s) {
            const double fa = std::count_if(small_a.begin(), small_a.end(), [x](double y) { return y <= x; }) / 50.0;
            const double fb = std::count_if(small_b.begin(), small_b.end(), [x](double y) { return y <= x; }) / 70.0;
            d = std::max(d, std::abs(fa - fb));
        }
    CHECK(ks_two_sample(small_a, small_b).statistic == Approx(d).epsilon(1e-14));
    CHECK(kolmogorov_tail(0.0) == 1.0);
    CHECK(kolmogorov_tail(1.358) == Approx(0.05).margin(1e-3));
}
