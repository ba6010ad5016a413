#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace kpz {

/// A scalar nonlinearity F together with what is known about it.
struct NonlinearitySpec {
    std::string name;
    std::function<double(double)> eval;
    /// Local Lipschitz bound of F on [-R, R].
    std::function<double(double)> lipschitz_radius_policy;
    std::optional<double> known_beta;

    double operator()(double x) const { return eval(x); }
};

/// Names of the built-in nonlinearity battery.
const std::vector<std::string>& nonlinearity_battery();

/// Looks up a battery entry or one of the auxiliary nonlinearities
/// ("abs_smooth", "exp_x2", "exp_x2_over_8", "zero"). Throws
/// std::invalid_argument for unknown names.
NonlinearitySpec nonlinearity_by_name(std::string_view name);

/// a F + b G, with the Lipschitz policy and known beta combined linearly.
NonlinearitySpec linear_combination(double a, const NonlinearitySpec& f, double b, const NonlinearitySpec& g);

/// Quadrature refinement no longer agrees; usually F is not in L2(P^G).
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double coarse, double fine)
        : std::runtime_error(what), coarse_(coarse), fine_(fine) {}
    double coarse() const { return coarse_; }
    double fine() const { return fine_; }

private:
    double coarse_;
    double fine_;
};

/**
 * Quadrature rule against the standard Gaussian measure on R.
 *
 * Built from the Gaussian rule for the half-line weight exp(-x^2/2) on
 * [0, inf), mirrored to (-inf, 0]. Polynomials on each half-line of degree
 * below 2 * order are integrated exactly, so kinks at the origin (|x|) cost
 * nothing. Weights sum to one.
 */
struct GaussianRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Cached rule with `order` nodes per half-line. Thread-safe.
const GaussianRule& gaussian_rule(int order);

double gaussian_expectation(const std::function<double(double)>& g, int order);

inline constexpr double kQuadratureTolerance = 1e-9;

/// beta = E^G[F(X)(X^2 - 1)] / 2 (equal to E^G F''/2 by Gaussian
/// integration by parts). Evaluated at quad_order and 2*quad_order; throws
/// ConvergenceError if the two disagree beyond kQuadratureTolerance.
double effective_beta(const NonlinearitySpec& f, int quad_order = 64);

struct GaussianL2Report {
    double norm_f = 0.0;        ///< (E^G F^2)^(1/2)
    double norm_fprime = 0.0;   ///< (E^G F'^2)^(1/2), F' by central differences
    bool pass = false;
};

/// Checks F, F' in L2(P^G) by stability of the norms under refinement.
/// Divergence is reported as pass = false, never thrown.
GaussianL2Report gaussian_l2_check(const NonlinearitySpec& f, int quad_order = 64);

/// Coefficients c_m = E^G[F He_m] / m! for the probabilists' Hermite
/// polynomials He_0 = 1, He_1 = x, He_2 = x^2 - 1, ...
struct HermiteExpansion {
    int order = 0;
    std::vector<double> coeffs;
    /// (E^G F^2 - sum_m m! c_m^2)^(1/2)
    double tail_norm = 0.0;
};

HermiteExpansion hermite_coefficients(const NonlinearitySpec& f, int max_order, int quad_order = 64);

}  // namespace kpz
