#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tse/corridor.hpp"
#include "tse/network.hpp"
#include "tse/pidl.hpp"
#include "tse/solver.hpp"

namespace tse {

/// Training hyperparameters as they appear in the experiment config file.
/// The desk-scale defaults reproduce the headline experiment within the
/// documented runtime budget on a small CPU.
struct PidlSettings {
    double mu = 0.5;
    int n_observations = 250;
    int n_collocation = 1500;
    double learning_rate = 1e-3;
    long iterations = 6000;
    std::vector<int> hidden_layers{24, 24, 24};
    bool output_squash = true;
    double observation_noise = 0.0;
    long log_interval = 500;

    bool operator==(const PidlSettings&) const = default;

    PidlConfig to_pidl_config(std::uint64_t seed) const;
    NetworkSpec to_network_spec() const;
};

struct ClassifierSettings {
    int points_per_segment = 50;
    std::vector<int> hidden_layers{16, 16};
    double learning_rate = 1e-3;
    long iterations = 3000;
    double holdout_fraction = 0.2;

    bool operator==(const ClassifierSettings&) const = default;
};

struct ExperimentConfig {
    CorridorSpec corridor = testbed_corridor();
    SolverConfig solver;
    PidlSettings pidl;
    ClassifierSettings classifier;
    int ensemble_size = 5;
    std::uint64_t seed = 1;
    int workers = 0; ///< 0 = hardware concurrency
    std::string output_dir = "out";
    bool write_estimate_fields = false;
    bool plain_dl_per_segment = false;
    bool uniform_ensemble_weights = false;

    bool operator==(const ExperimentConfig&) const = default;

    void validate() const;
};

/// Reads a JSON config; missing keys fall back to the defaults above, so an
/// empty document reproduces the embedded test-bed experiment.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig config_from_json_text(const std::string& text);

/// Writes the fully resolved config; load_config(save_config(c)) == c.
void save_config(const ExperimentConfig& config, const std::string& path);
std::string config_to_json_text(const ExperimentConfig& config);

} // namespace tse
