#include "kpzlab/torus.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>

namespace kpz {

// ---------------------------------------------------------------------------
// SpectralField

SpectralField::SpectralField(int cutoff, bool zero_mean) : zero_mean_(zero_mean) {
    if (cutoff < 0) throw std::invalid_argument("SpectralField: negative cutoff");
    modes_.assign(static_cast<std::size_t>(cutoff) + 1, Complex{});
}

SpectralField SpectralField::from_modes(std::vector<Complex> modes, bool zero_mean) {
    if (modes.empty()) throw std::invalid_argument("SpectralField: empty mode vector");
    SpectralField f;
    f.modes_ = std::move(modes);
    f.zero_mean_ = zero_mean;
    f.enforce_invariants();
    return f;
}

Complex SpectralField::operator[](int k) const {
    const int a = k < 0 ? -k : k;
    if (a > cutoff()) return {};
    const Complex c = modes_[static_cast<std::size_t>(a)];
    return k < 0 ? std::conj(c) : c;
}

void SpectralField::set(int k, Complex value) {
    const int a = k < 0 ? -k : k;
    if (a > cutoff()) throw std::out_of_range("SpectralField::set: mode beyond cutoff");
    modes_[static_cast<std::size_t>(a)] = k < 0 ? std::conj(value) : value;
    if (a == 0) enforce_invariants();
}

void SpectralField::enforce_invariants() {
    modes_[0] = zero_mean_ ? Complex{} : Complex{modes_[0].real(), 0.0};
}

void SpectralField::set_zero_mean(bool flag) {
    zero_mean_ = flag;
    enforce_invariants();
}

SpectralField& SpectralField::operator+=(const SpectralField& other) {
    if (other.cutoff() > cutoff()) modes_.resize(other.modes_.size(), Complex{});
    for (std::size_t k = 0; k < other.modes_.size(); ++k) modes_[k] += other.modes_[k];
    zero_mean_ = zero_mean_ && other.zero_mean_;
    return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& other) {
    if (other.cutoff() > cutoff()) modes_.resize(other.modes_.size(), Complex{});
    for (std::size_t k = 0; k < other.modes_.size(); ++k) modes_[k] -= other.modes_[k];
    zero_mean_ = zero_mean_ && other.zero_mean_;
    return *this;
}

SpectralField& SpectralField::operator*=(double scale) {
    for (auto& c : modes_) c *= scale;
    return *this;
}

SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
SpectralField operator*(double scale, SpectralField a) { return a *= scale; }

double max_coefficient_difference(const SpectralField& a, const SpectralField& b) {
    const int n = std::max(a.cutoff(), b.cutoff());
    double worst = 0.0;
    for (int k = 0; k <= n; ++k) worst = std::max(worst, std::abs(a[k] - b[k]));
    return worst;
}

double l2_norm_squared(const SpectralField& f) {
    const auto m = f.modes();
    double sum = std::norm(m[0]);
    for (std::size_t k = 1; k < m.size(); ++k) sum += 2.0 * std::norm(m[k]);
    return sum;
}

double pairing(const SpectralField& u, const SpectralField& phi) {
    const int n = std::min(u.cutoff(), phi.cutoff());
    double sum = (u[0] * std::conj(phi[0])).real();
    for (int k = 1; k <= n; ++k) sum += 2.0 * (u[k] * std::conj(phi[k])).real();
    return sum;
}

double GridField::mean_square() const {
    double sum = 0.0;
    for (double v : values) sum += v * v;
    return values.empty() ? 0.0 : sum / static_cast<double>(values.size());
}

double GridField::sup_norm() const {
    double worst = 0.0;
    for (double v : values) worst = std::max(worst, std::abs(v));
    return worst;
}

// ---------------------------------------------------------------------------
// Operators

SpectralField project_uv(const SpectralField& f, int n) {
    if (n < 0) throw std::invalid_argument("project_uv: negative cutoff");
    const int keep = std::min(n, f.cutoff());
    std::vector<Complex> modes(f.modes().begin(), f.modes().begin() + keep + 1);
    return SpectralField::from_modes(std::move(modes), f.zero_mean());
}

SpectralField with_cutoff(const SpectralField& f, int n) {
    if (n < 0) throw std::invalid_argument("with_cutoff: negative cutoff");
    std::vector<Complex> modes(static_cast<std::size_t>(n) + 1, Complex{});
    const auto src = f.modes();
    std::copy_n(src.begin(), std::min(src.size(), modes.size()), modes.begin());
    return SpectralField::from_modes(std::move(modes), f.zero_mean());
}

SpectralField derivative(const SpectralField& f) {
    SpectralField out(f.cutoff(), true);
    auto dst = out.mutable_modes();
    const auto src = f.modes();
    for (std::size_t k = 1; k < src.size(); ++k)
        dst[k] = Complex{0.0, kTwoPi * static_cast<double>(k)} * src[k];
    return out;
}

double fractional_symbol(int k, double alpha, double power) {
    if (!(alpha > 0.5 && alpha <= 1.0))
        throw std::invalid_argument("fractional_symbol: alpha must lie in (1/2, 1]");
    if (power != 1.0 && power != 0.5) throw std::invalid_argument("fractional_symbol: power must be 1 or 1/2");
    if (k == 0) return 0.0;
    const double wave = kTwoPi * std::abs(static_cast<double>(k));
    return std::pow(wave, 2.0 * alpha * power);
}

SpectralField fractional_dissipation(const SpectralField& f, double alpha, double power) {
    if (!(alpha > 0.5 && alpha <= 1.0))
        throw std::invalid_argument("fractional_dissipation: alpha must lie in (1/2, 1]");
    if (power != 1.0 && power != 0.5)
        throw std::invalid_argument("fractional_dissipation: power must be 1 or 1/2");
    SpectralField out(f.cutoff(), true);
    auto dst = out.mutable_modes();
    const auto src = f.modes();
    for (std::size_t k = 1; k < src.size(); ++k)
        dst[k] = fractional_symbol(static_cast<int>(k), alpha, power) * src[k];
    return out;
}

std::size_t fft_friendly_size(std::size_t n) {
    for (std::size_t m = std::max<std::size_t>(n, 1);; ++m) {
        std::size_t r = m;
        for (std::size_t p : {2u, 3u, 5u})
            while (r % p == 0) r /= p;
        if (r == 1) return m;
    }
}

std::size_t dealiased_grid_size(int cutoff, int oversample) {
    if (oversample < 2) throw std::invalid_argument("grid oversampling factor must be >= 2");
    return fft_friendly_size(static_cast<std::size_t>(oversample) * (2 * cutoff) + 1);
}

// ---------------------------------------------------------------------------
// FFTW-backed transforms

struct GridTransform::Plans {
    fftw_plan forward = nullptr;   // r2c
    fftw_plan backward = nullptr;  // c2r
};

namespace {

class PlanCache {
public:
    ~PlanCache() {
        for (auto& [m, plans] : plans_) {
            fftw_destroy_plan(plans->forward);
            fftw_destroy_plan(plans->backward);
        }
    }

    const GridTransform::Plans* get(std::size_t m) {
        std::lock_guard lock(mutex_);
        auto it = plans_.find(m);
        if (it != plans_.end()) return it->second.get();
        std::vector<double> real(m);
        std::vector<Complex> spec(m / 2 + 1);
        auto plans = std::make_unique<GridTransform::Plans>();
        const int n = static_cast<int>(m);
        auto* cspec = reinterpret_cast<fftw_complex*>(spec.data());
        plans->forward = fftw_plan_dft_r2c_1d(n, real.data(), cspec, FFTW_ESTIMATE | FFTW_UNALIGNED);
        plans->backward = fftw_plan_dft_c2r_1d(n, cspec, real.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (!plans->forward || !plans->backward)
            throw std::runtime_error("FFTW plan creation failed for size " + std::to_string(m));
        const auto* raw = plans.get();
        plans_.emplace(m, std::move(plans));
        return raw;
    }

private:
    std::mutex mutex_;
    std::map<std::size_t, std::unique_ptr<GridTransform::Plans>> plans_;
};

PlanCache& plan_cache() {
    static PlanCache cache;
    return cache;
}

}  // namespace

GridTransform::GridTransform(std::size_t m)
    : m_(m), plans_(plan_cache().get(m)), spectrum_(m / 2 + 1), real_(m) {
    if (m < 1) throw std::invalid_argument("GridTransform: empty grid");
}

GridTransform::~GridTransform() = default;
GridTransform::GridTransform(GridTransform&&) noexcept = default;
GridTransform& GridTransform::operator=(GridTransform&&) noexcept = default;

void GridTransform::to_grid(std::span<const Complex> modes, std::span<double> values) {
    if (modes.size() > max_cutoff() + 1)
        throw std::invalid_argument("GridTransform::to_grid: grid too small for cutoff (need M >= 2N+1)");
    if (values.size() != m_) throw std::invalid_argument("GridTransform::to_grid: output size mismatch");
    std::fill(spectrum_.begin(), spectrum_.end(), Complex{});
    std::copy(modes.begin(), modes.end(), spectrum_.begin());
    half_spectrum_to_grid(values);
}

void GridTransform::half_spectrum_to_grid(std::span<double> values) {
    if (values.size() != m_) throw std::invalid_argument("GridTransform: output size mismatch");
    fftw_execute_dft_c2r(plans_->backward, reinterpret_cast<fftw_complex*>(spectrum_.data()),
                         values.data());
}

void GridTransform::from_grid(std::span<const double> values, std::span<Complex> modes) {
    if (values.size() != m_) throw std::invalid_argument("GridTransform::from_grid: input size mismatch");
    if (modes.size() > max_cutoff() + 1)
        throw std::invalid_argument("GridTransform::from_grid: cutoff too large (need M >= 2N+1)");
    std::copy(values.begin(), values.end(), real_.begin());
    fftw_execute_dft_r2c(plans_->forward, real_.data(), reinterpret_cast<fftw_complex*>(spectrum_.data()));
    const double inv = 1.0 / static_cast<double>(m_);
    for (std::size_t k = 0; k < modes.size(); ++k) modes[k] = spectrum_[k] * inv;
}

GridField to_grid(const SpectralField& f, std::size_t m) {
    if (m < static_cast<std::size_t>(2 * f.cutoff() + 1))
        throw std::invalid_argument("to_grid: need M >= 2N+1");
    GridTransform t(m);
    GridField g(m);
    t.to_grid(f.modes(), g.values);
    return g;
}

SpectralField from_grid(const GridField& g, int n, bool zero_mean) {
    if (n < 0) throw std::invalid_argument("from_grid: negative cutoff");
    if (g.size() < static_cast<std::size_t>(2 * n + 1))
        throw std::invalid_argument("from_grid: need M >= 2N+1");
    GridTransform t(g.size());
    std::vector<Complex> modes(static_cast<std::size_t>(n) + 1);
    t.from_grid(g.values, modes);
    return SpectralField::from_modes(std::move(modes), zero_mean);
}

}  // namespace kpz
