#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace kpz {

using Complex = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/**
 * Real scalar field on the unit torus R/Z stored by its Fourier coefficients.
 *
 * Only the modes k = 0..N are stored; the coefficient at -k is the complex
 * conjugate of the one at k, so every SpectralField is real-valued by
 * construction. The k = 0 coefficient is kept real, and is identically zero
 * when the field is flagged zero-mean.
 */
class SpectralField {
public:
    SpectralField() = default;
    explicit SpectralField(int cutoff, bool zero_mean = false);

    /// Builds a field from the non-negative half spectrum c_0..c_N.
    static SpectralField from_modes(std::vector<Complex> modes, bool zero_mean = false);

    int cutoff() const { return static_cast<int>(modes_.size()) - 1; }
    bool zero_mean() const { return zero_mean_; }

    /// Coefficient at any integer k; modes with |k| > N are absent and read as 0.
    Complex operator[](int k) const;

    /// Sets the coefficient at k (and implicitly its mirror -k).
    void set(int k, Complex value);

    std::span<const Complex> modes() const { return modes_; }

    /// Mutable access for steppers. Callers restore the invariants with
    /// enforce_invariants() when they may have touched mode 0.
    std::span<Complex> mutable_modes() { return modes_; }
    void enforce_invariants();

    void set_zero_mean(bool flag);

    SpectralField& operator+=(const SpectralField& other);
    SpectralField& operator-=(const SpectralField& other);
    SpectralField& operator*=(double scale);

private:
    std::vector<Complex> modes_{Complex{}};
    bool zero_mean_ = false;
};

SpectralField operator+(SpectralField a, const SpectralField& b);
SpectralField operator-(SpectralField a, const SpectralField& b);
SpectralField operator*(double scale, SpectralField a);

/// Largest coefficient difference over all k, treating absent modes as zero.
double max_coefficient_difference(const SpectralField& a, const SpectralField& b);

/// Sum over k in {-N..N} of |c_k|^2, i.e. the squared L2(T) norm.
double l2_norm_squared(const SpectralField& f);

/// Real L2(T) pairing <u, phi> = sum_k u_k conj(phi_k).
double pairing(const SpectralField& u, const SpectralField& phi);

/// Equispaced samples x_j = j/M of a real field.
struct GridField {
    std::vector<double> values;

    GridField() = default;
    explicit GridField(std::size_t size, double fill = 0.0) : values(size, fill) {}
    explicit GridField(std::vector<double> v) : values(std::move(v)) {}

    std::size_t size() const { return values.size(); }
    double mean_square() const;
    double sup_norm() const;
};

/// UV projection: keeps |k| <= N. The result has cutoff min(N, f.cutoff()).
SpectralField project_uv(const SpectralField& f, int n);

/// Same field at cutoff n: truncated (like project_uv) or zero-padded.
SpectralField with_cutoff(const SpectralField& f, int n);

/// Exact derivative: c_k -> 2 pi i k c_k. The result is zero-mean.
SpectralField derivative(const SpectralField& f);

/// Fourier multiplier (2 pi |k|)^(2 alpha power) for alpha in (1/2, 1] and
/// power in {1, 1/2}, i.e. (-Delta)^alpha or (-Delta)^(alpha/2). The sign for
/// dissipation is left to the caller.
SpectralField fractional_dissipation(const SpectralField& f, double alpha, double power);

/// Multiplier symbol (2 pi |k|)^(2 alpha power) for a single mode.
double fractional_symbol(int k, double alpha, double power);

/// Evaluates the trigonometric polynomial at x_j = j/M. Requires M >= 2N+1.
GridField to_grid(const SpectralField& f, std::size_t m);

/// Discrete Fourier coefficients (forward transform divided by M), truncated
/// to |k| <= N. Requires M >= 2N+1.
SpectralField from_grid(const GridField& g, int n, bool zero_mean = false);

/// Smallest integer >= n whose only prime factors are 2, 3 and 5.
std::size_t fft_friendly_size(std::size_t n);

/// Grid size for evaluating nonlinear terms of a cutoff-N field with the
/// given oversampling factor over the minimal 2N+1 grid.
std::size_t dealiased_grid_size(int cutoff, int oversample);

/**
 * Reusable real transform pair of fixed size M for hot loops.
 *
 * Holds its own scratch buffers, so one instance must not be shared between
 * threads; distinct instances are independent.
 */
class GridTransform {
public:
    explicit GridTransform(std::size_t m);
    ~GridTransform();
    GridTransform(GridTransform&&) noexcept;
    GridTransform& operator=(GridTransform&&) noexcept;
    GridTransform(const GridTransform&) = delete;
    GridTransform& operator=(const GridTransform&) = delete;

    std::size_t size() const { return m_; }
    std::size_t max_cutoff() const { return (m_ - 1) / 2; }

    /// values[j] = sum_{|k|<=N} c_k e^{2 pi i k j / M}, modes given for k = 0..N.
    void to_grid(std::span<const Complex> modes, std::span<double> values);

    /// modes[k] = (1/M) sum_j values[j] e^{-2 pi i k j / M} for k = 0..modes.size()-1.
    void from_grid(std::span<const double> values, std::span<Complex> modes);

    /// Raw half spectrum (k = 0..M/2) of the last from_grid call, unnormalized.
    std::span<Complex> half_spectrum() { return spectrum_; }
    /// Inverse of the full half spectrum (k = 0..M/2), no normalization.
    void half_spectrum_to_grid(std::span<double> values);

    struct Plans;

private:
    std::size_t m_ = 0;
    const Plans* plans_ = nullptr;
    std::vector<Complex> spectrum_;
    std::vector<double> real_;
};

}  // namespace kpz
