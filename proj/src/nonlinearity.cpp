#include "kpzlab/nonlinearity.hpp"

#include "kpzlab/torus.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>

namespace kpz {

namespace {

constexpr double kInvSqrtTwoPi = 0.39894228040143267794;

NonlinearitySpec make(std::string name, std::function<double(double)> eval,
                      std::function<double(double)> lipschitz, std::optional<double> beta) {
    return NonlinearitySpec{std::move(name), std::move(eval), std::move(lipschitz), beta};
}

// Gauss-Legendre rule on [-1, 1] by Golub-Welsch.
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd sub(n - 1);
    for (int k = 1; k < n; ++k) sub[k - 1] = k / std::sqrt(4.0 * k * k - 1.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    nodes.resize(n);
    weights.resize(n);
    for (int i = 0; i < n; ++i) {
        nodes[i] = solver.eigenvalues()[i];
        const double v = solver.eigenvectors()(0, i);
        weights[i] = 2.0 * v * v;
    }
}

// Gaussian rule for the weight phi(x) = exp(-x^2/2)/sqrt(2 pi) on [0, inf).
// The recurrence coefficients come from the Stieltjes procedure applied to a
// fine composite Gauss-Legendre discretization of the weight.
GaussianRule half_range_rule(int order) {
    const double upper = std::sqrt(4.0 * order) + 14.0;
    constexpr double panel = 0.2;
    constexpr int per_panel = 24;
    std::vector<double> gl_x, gl_w;
    gauss_legendre(per_panel, gl_x, gl_w);

    std::vector<double> x, w;
    const int panels = static_cast<int>(std::ceil(upper / panel));
    x.reserve(static_cast<std::size_t>(panels) * per_panel);
    w.reserve(x.capacity());
    for (int p = 0; p < panels; ++p) {
        const double a = p * panel;
        for (int i = 0; i < per_panel; ++i) {
            const double xi = a + 0.5 * panel * (gl_x[i] + 1.0);
            x.push_back(xi);
            w.push_back(0.5 * panel * gl_w[i] * kInvSqrtTwoPi * std::exp(-0.5 * xi * xi));
        }
    }

    const std::size_t m = x.size();
    double mu0 = 0.0;
    for (double wi : w) mu0 += wi;

    std::vector<double> alpha(order), beta(order);
    std::vector<double> q_prev(m, 0.0), q(m, 1.0 / std::sqrt(mu0)), r(m);
    auto dot = [&](const std::vector<double>& a, const std::vector<double>& b) {
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) s += w[i] * a[i] * b[i];
        return s;
    };
    double sqrt_beta = 0.0;
    for (int k = 0; k < order; ++k) {
        double a = 0.0;
        for (std::size_t i = 0; i < m; ++i) a += w[i] * x[i] * q[i] * q[i];
        alpha[k] = a;
        for (std::size_t i = 0; i < m; ++i) r[i] = (x[i] - a) * q[i] - sqrt_beta * q_prev[i];
        // one pass of local reorthogonalization
        const double c0 = dot(r, q);
        const double c1 = dot(r, q_prev);
        for (std::size_t i = 0; i < m; ++i) r[i] -= c0 * q[i] + c1 * q_prev[i];
        const double b = dot(r, r);
        beta[k] = b;
        sqrt_beta = std::sqrt(b);
        for (std::size_t i = 0; i < m; ++i) {
            q_prev[i] = q[i];
            q[i] = r[i] / sqrt_beta;
        }
    }

    Eigen::VectorXd diag(order);
    Eigen::VectorXd sub(std::max(order - 1, 0));
    for (int k = 0; k < order; ++k) diag[k] = alpha[k];
    for (int k = 0; k + 1 < order; ++k) sub[k] = std::sqrt(beta[k]);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);

    // Christoffel weights 1 / sum_k p_k(x)^2 from the orthonormal recurrence;
    // unlike squared eigenvector entries these stay relatively accurate in the
    // far tail. Rescaling keeps the recurrence finite for large nodes.
    GaussianRule rule;
    rule.nodes.resize(order);
    rule.weights.resize(order);
    for (int i = 0; i < order; ++i) {
        const double xi = solver.eigenvalues()[i];
        double p_prev = 0.0, p = 1.0 / std::sqrt(mu0);
        double sum = p * p, log_scale = 0.0;
        for (int k = 0; k + 1 < order; ++k) {
            const double prev_coupling = k == 0 ? 0.0 : std::sqrt(beta[k - 1]);
            const double next = ((xi - alpha[k]) * p - prev_coupling * p_prev) / std::sqrt(beta[k]);
            p_prev = p;
            p = next;
            sum += p * p;
            if (std::abs(p) > 1e100) {
                p *= 1e-100;
                p_prev *= 1e-100;
                sum *= 1e-200;
                log_scale += 200.0 * std::log(10.0);
            }
        }
        rule.nodes[i] = xi;
        rule.weights[i] = std::exp(-std::log(sum) - log_scale);
    }
    return rule;
}

bool close(double coarse, double fine) {
    return std::abs(fine - coarse) <= kQuadratureTolerance * std::max(1.0, std::abs(fine));
}

}  // namespace

const std::vector<std::string>& nonlinearity_battery() {
    static const std::vector<std::string> names{"x2", "abs", "x", "x3", "x2_plus_0.1x3", "sin", "exp_x2_over_4"};
    return names;
}

NonlinearitySpec nonlinearity_by_name(std::string_view name) {
    if (name == "x2")
        return make("x2", [](double x) { return x * x; }, [](double r) { return 2.0 * r; }, 1.0);
    if (name == "abs")
        return make("abs", [](double x) { return std::abs(x); }, [](double) { return 1.0; },
                    0.5 * std::sqrt(2.0 / kPi));
    if (name == "x") return make("x", [](double x) { return x; }, [](double) { return 1.0; }, 0.0);
    if (name == "x3")
        return make("x3", [](double x) { return x * x * x; }, [](double r) { return 3.0 * r * r; }, 0.0);
    if (name == "x2_plus_0.1x3")
        return make("x2_plus_0.1x3", [](double x) { return x * x + 0.1 * x * x * x; },
                    [](double r) { return 2.0 * r + 0.3 * r * r; }, 1.0);
    if (name == "sin") return make("sin", [](double x) { return std::sin(x); }, [](double) { return 1.0; }, 0.0);
    if (name == "exp_x2_over_4")
        return make("exp_x2_over_4", [](double x) { return std::exp(0.25 * x * x); },
                    [](double r) { return 0.5 * r * std::exp(0.25 * r * r); }, std::sqrt(2.0) / 2.0);
    // |x| rounded off at scale 0.1; globally 1-Lipschitz and smooth.
    if (name == "abs_smooth")
        return make("abs_smooth", [](double x) { return std::sqrt(x * x + 0.01); }, [](double) { return 1.0; },
                    std::nullopt);
    if (name == "exp_x2")
        return make("exp_x2", [](double x) { return std::exp(x * x); },
                    [](double r) { return 2.0 * r * std::exp(r * r); }, std::nullopt);
    if (name == "exp_x2_over_8")
        return make("exp_x2_over_8", [](double x) { return std::exp(0.125 * x * x); },
                    [](double r) { return 0.25 * r * std::exp(0.125 * r * r); }, 0.5 * (2.0 / std::sqrt(3.0)) * (4.0 / 3.0 - 1.0));
    if (name == "zero") return make("zero", [](double) { return 0.0; }, [](double) { return 0.0; }, 0.0);
    throw std::invalid_argument("unknown nonlinearity: " + std::string(name));
}

NonlinearitySpec linear_combination(double a, const NonlinearitySpec& f, double b, const NonlinearitySpec& g) {
    std::optional<double> beta;
    if (f.known_beta && g.known_beta) beta = a * *f.known_beta + b * *g.known_beta;
    auto fe = f.eval, ge = g.eval, fl = f.lipschitz_radius_policy, gl = g.lipschitz_radius_policy;
    return make(f.name + "+" + g.name, [=](double x) { return a * fe(x) + b * ge(x); },
                [=](double r) { return std::abs(a) * fl(r) + std::abs(b) * gl(r); }, beta);
}

const GaussianRule& gaussian_rule(int order) {
    if (order < 1) throw std::invalid_argument("gaussian_rule: order must be positive");
    static std::mutex mutex;
    static std::map<int, std::unique_ptr<GaussianRule>> cache;
    std::lock_guard lock(mutex);
    auto it = cache.find(order);
    if (it != cache.end()) return *it->second;
    const GaussianRule half = half_range_rule(order);
    auto full = std::make_unique<GaussianRule>();
    full->nodes.reserve(2 * order);
    full->weights.reserve(2 * order);
    for (int i = order - 1; i >= 0; --i) {
        full->nodes.push_back(-half.nodes[i]);
        full->weights.push_back(half.weights[i]);
    }
    for (int i = 0; i < order; ++i) {
        full->nodes.push_back(half.nodes[i]);
        full->weights.push_back(half.weights[i]);
    }
    return *cache.emplace(order, std::move(full)).first->second;
}

double gaussian_expectation(const std::function<double(double)>& g, int order) {
    const auto& rule = gaussian_rule(order);
    double sum = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) sum += rule.weights[i] * g(rule.nodes[i]);
    return sum;
}

double effective_beta(const NonlinearitySpec& f, int quad_order) {
    if (quad_order < 32) throw std::invalid_argument("effective_beta: quad_order must be >= 32");
    auto integrand = [&](double x) { return 0.5 * f(x) * (x * x - 1.0); };
    const double coarse = gaussian_expectation(integrand, quad_order);
    const double fine = gaussian_expectation(integrand, 2 * quad_order);
    if (!std::isfinite(coarse) || !std::isfinite(fine) || !close(coarse, fine))
        throw ConvergenceError("effective_beta: quadrature did not converge for " + f.name, coarse, fine);
    return fine;
}

GaussianL2Report gaussian_l2_check(const NonlinearitySpec& f, int quad_order) {
    if (quad_order < 32) throw std::invalid_argument("gaussian_l2_check: quad_order must be >= 32");
    auto square = [&](double x) {
        const double v = f(x);
        return v * v;
    };
    auto derivative_square = [&](double x) {
        const double h = 1e-5 * std::max(1.0, std::abs(x));
        const double d = (f(x + h) - f(x - h)) / (2.0 * h);
        return d * d;
    };
    GaussianL2Report report;
    const double f_coarse = gaussian_expectation(square, quad_order);
    const double f_fine = gaussian_expectation(square, 2 * quad_order);
    const double d_coarse = gaussian_expectation(derivative_square, quad_order);
    const double d_fine = gaussian_expectation(derivative_square, 2 * quad_order);
    report.norm_f = std::sqrt(f_fine);
    report.norm_fprime = std::sqrt(d_fine);
    // The finite-difference derivative limits how tightly F' can agree.
    auto stable = [](double a, double b, double tol) {
        return std::isfinite(a) && std::isfinite(b) && std::abs(a - b) <= tol * std::max(1.0, std::abs(b));
    };
    report.pass = stable(f_coarse, f_fine, 1e-6) && stable(d_coarse, d_fine, 1e-4);
    return report;
}

HermiteExpansion hermite_coefficients(const NonlinearitySpec& f, int max_order, int quad_order) {
    if (max_order < 2) throw std::invalid_argument("hermite_coefficients: order must be >= 2");
    if (quad_order < 32) throw std::invalid_argument("hermite_coefficients: quad_order must be >= 32");
    auto project = [&](int order) {
        const auto& rule = gaussian_rule(order);
        std::vector<double> acc(static_cast<std::size_t>(max_order) + 1, 0.0);
        double norm2 = 0.0;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
            const double x = rule.nodes[i];
            const double fw = f(x) * rule.weights[i];
            norm2 += fw * f(x);
            double h_prev = 1.0, h = x;
            acc[0] += fw;
            acc[1] += fw * x;
            for (int m = 1; m < max_order; ++m) {
                const double next = x * h - m * h_prev;
                h_prev = h;
                h = next;
                acc[static_cast<std::size_t>(m) + 1] += fw * h;
            }
        }
        double factorial = 1.0;
        for (int m = 0; m <= max_order; ++m) {
            if (m > 0) factorial *= m;
            acc[static_cast<std::size_t>(m)] /= factorial;
        }
        acc.push_back(norm2);
        return acc;
    };
    const auto coarse = project(quad_order);
    const auto fine = project(2 * quad_order);
    for (int m = 0; m <= max_order; ++m) {
        const auto idx = static_cast<std::size_t>(m);
        if (!std::isfinite(fine[idx]) || !close(coarse[idx], fine[idx]))
            throw ConvergenceError("hermite_coefficients: coefficient " + std::to_string(m) +
                                       " did not converge for " + f.name,
                                   coarse[idx], fine[idx]);
    }
    HermiteExpansion out;
    out.order = max_order;
    out.coeffs.assign(fine.begin(), fine.begin() + max_order + 1);
    double captured = 0.0, factorial = 1.0;
    for (int m = 0; m <= max_order; ++m) {
        if (m > 0) factorial *= m;
        captured += factorial * out.coeffs[static_cast<std::size_t>(m)] * out.coeffs[static_cast<std::size_t>(m)];
    }
    const double norm2 = fine.back();
    out.tail_norm = std::isfinite(norm2) ? std::sqrt(std::max(0.0, norm2 - captured))
                                         : std::numeric_limits<double>::infinity();
    return out;
}

}  // namespace kpz
