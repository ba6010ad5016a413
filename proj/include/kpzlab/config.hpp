#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "kpzlab/dynamics.hpp"

namespace kpz {

/// Raised for malformed or inconsistent configuration (CLI exit code 2).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

const std::vector<std::string>& experiment_names();

struct ExperimentConfig {
    std::string experiment = "simulate";
    SimulationConfig sim;
    std::string nonlinearity = "x2";
    std::vector<std::string> nonlinearities{"x2", "x2_plus_0.1x3"};
    std::vector<std::string> targets{"sine"};
    std::vector<double> eps{0.5};
    std::vector<int> n_list{16};
    std::vector<double> alphas{0.75, 0.9};
    std::size_t ensemble = 100;
    std::string output_dir = "kpzlab-out";
    std::string probes_file;  ///< empty: default dictionary
    long record_every = 0;    ///< steps between records, 0: endpoints only
    unsigned workers = 0;
    int quad_order = 64;
    double beta = 1.0;
    int bridge_cutoff = 0;    ///< 0: same as the simulation cutoff
    long max_attempts = 1000000;
    std::string bridge_normalization = "white_noise";
    double ks_level = 0.01;

    /// Throws ConfigError.
    void validate() const;

    bool operator==(const ExperimentConfig&) const = default;
};

/// `key = value` lines under a `[experiment]` header; lists are comma separated.
std::string print_config(const ExperimentConfig& cfg);
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::string& path);

/// Shortest round-trip decimal form.
std::string format_double(double v);
double parse_double(std::string_view s);

}  // namespace kpz
