#pragma once

#include <stdexcept>
#include <vector>

#include "kpzlab/dynamics.hpp"
#include "kpzlab/torus.hpp"

namespace kpz {

/// Stochastic heat equation state: strictly positive grid values.
struct SheState {
    GridField z;
    double beta = 1.0;
    double t = 0.0;
};

class PositivityLoss : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Smallest FFT-friendly grid with M >= oversample (2N + 1) on which the
/// highest grid frequency is damped below 1e-16 per step.
std::size_t she_grid_size(int n, double dt, int oversample = 2);

/// Lie-splitting Ito stepper for dz = Lap z dt + beta z dW on a fixed grid.
/// The noise is the grid realization of the same truncated increment the
/// Burgers and KPZ steppers consume, mode 0 included.
class SheStepper {
public:
    SheStepper(std::size_t grid_size, double dt);

    void step(SheState& s, const NoiseIncrement& dw);
    void step_deterministic(SheState& s);

    std::size_t grid_size() const { return grid_.size(); }

private:
    void heat(SheState& s);

    double dt_;
    GridTransform grid_;
    std::vector<double> decay_;
    std::vector<double> noise_;
};

SheState step_she(const SheState& z, double dt, const NoiseIncrement& dw);

/// h = log(z) / beta pointwise. Requires beta > 0 and z > 0.
GridField cole_hopf_height(const SheState& z);

/// z = exp(beta h) pointwise.
SheState she_from_height(const GridField& h, double beta);

/// max over recorded times of sup_x |h1(t, x) - h2(t, x)|; trajectories are
/// indexed [time][grid point].
double coupled_tube_bound(const std::vector<GridField>& h1, const std::vector<GridField>& h2);

}  // namespace kpz
