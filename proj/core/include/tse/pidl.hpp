#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tse/corridor.hpp"
#include "tse/density_field.hpp"
#include "tse/network.hpp"

namespace tse {

/// Sparse density observations (the data-loss domain O).
struct ObservationPoint {
    double x = 0.0;
    double t = 0.0;
    double rho = 0.0;
};

struct ObservationSet {
    std::vector<ObservationPoint> points;
    int segment_index = -1; ///< 0-based owning segment, -1 when pooled
};

/// Residual evaluation coordinates (the physics-loss domain C).
struct CollocationPoint {
    double x = 0.0;
    double t = 0.0;
};

struct CollocationSet {
    std::vector<CollocationPoint> points;
    int segment_index = -1;
};

struct PidlConfig {
    double mu = 0.5;
    int n_observations = 250;
    int n_collocation = 10000;
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    long iterations = 20000;
    std::uint64_t seed = 1;
    InputMap normalization;
    long log_interval = 500;
    double observation_noise = 0.0; ///< additive Gaussian sigma, veh/m; off by default

    void validate() const;
};

struct TrainReport {
    struct Sample {
        long iteration = 0;
        double j = 0.0;
        double j_dl = 0.0;
        double j_phy = 0.0;
    };
    std::vector<Sample> trajectory;
    std::optional<double> final_relative_l2; ///< empty when the truth slice is all zero
    double wall_seconds = 0.0;
};

struct TrainOutcome {
    ParamVector params;
    TrainReport report;
};

/// Thrown when the training loss becomes non-finite.
struct TrainingDiverged : std::runtime_error {
    TrainingDiverged(long iteration, const std::string& what)
        : std::runtime_error(what), iteration(iteration) {}
    long iteration;
};

/// Uniform draw without replacement from the ground-truth grid points owned
/// by one segment (half-open ownership, last segment closed on the right).
ObservationSet sample_observations(const DensityField& field, const CorridorSpec& corridor,
                                   std::size_t segment_index, std::size_t n,
                                   std::uint64_t seed);

/// Uniform continuous coordinates within segment x [0, horizon].
CollocationSet sample_collocation(const SegmentSpec& seg, double horizon, std::size_t n,
                                  std::uint64_t seed);

/// LWR residual in density form: d_rho_dt + v_f (1 - 2 rho/rho_m) d_rho_dx.
double physics_residual(const EvalRecord& record, const SegmentSpec& seg);

/// Mean squared residual over the collocation set.
double physics_cost(const ParamVector& params, const NetworkSpec& spec, const InputMap& map,
                    const CollocationSet& collocation, const SegmentSpec& seg);

/// Mean squared estimation error over the observation set.
double data_cost(const ParamVector& params, const NetworkSpec& spec, const InputMap& map,
                 const ObservationSet& observations);

/// Combined cost mu * J_PHY + (1 - mu) * J_DL.
double pidl_cost(double mu, double j_phy, double j_dl);

/// The full PIDL objective over fixed observation/collocation sets. Owns the
/// batched evaluator, so repeated calls during the optimizer loop reuse all
/// buffers. Physics coefficients and squash scales are resolved per point
/// from the owning segment, so one instance also serves corridor-spanning
/// networks.
class PidlObjective {
public:
    struct Value {
        double j = 0.0;
        double j_dl = 0.0;
        double j_phy = 0.0;
    };

    PidlObjective(NetworkSpec spec, InputMap map, const CorridorSpec& corridor,
                  ObservationSet observations, CollocationSet collocation, double mu);
    ~PidlObjective();
    PidlObjective(PidlObjective&&) noexcept;

    Value evaluate(const ParamVector& params);
    Value evaluate_with_gradient(const ParamVector& params, ParamVector& grad);

    const NetworkSpec& spec() const { return spec_; }
    double mu() const { return mu_; }

private:
    Value costs(const BatchEval& eval, BatchAdjoint* adjoint);

    NetworkSpec spec_;
    double mu_;
    std::size_t n_obs_;
    std::vector<double> obs_rho_;
    std::vector<double> colloc_vf_;
    std::vector<double> colloc_rho_m_;
    std::unique_ptr<NetworkEvaluator> evaluator_;
    BatchAdjoint adjoint_;
};

/// Adam loop over the PIDL objective; samples observations and collocation
/// points per the config seed, trains for config.iterations, and reports the
/// trajectory plus the relative L2 error on the segment's slice of the truth
/// grid (omitted when that slice is identically zero).
TrainOutcome train_pidl(const DensityField& truth, const CorridorSpec& corridor,
                        std::size_t segment_index, const PidlConfig& config,
                        const NetworkSpec& spec);

/// Core loop on a prepared objective and initial parameters.
TrainOutcome train_pidl(PidlObjective& objective, ParamVector initial_params,
                        const PidlConfig& config);

/// Relative L2 error sqrt(sum |est - truth|^2) / sqrt(sum |truth|^2) over all
/// grid points. Grids must match; all-zero truth is a domain error.
double relative_l2_error(const DensityField& estimate, const DensityField& truth);

/// Columns of the field owned by one segment, as a standalone field.
DensityField extract_segment(const DensityField& field, const CorridorSpec& corridor,
                             std::size_t segment_index);

/// Network evaluation over an entire grid (row-batched).
DensityField network_field(const ParamVector& params, const NetworkSpec& spec,
                           const InputMap& map, const CorridorSpec& corridor,
                           const DensityField& grid_like);

/// Trajectory CSV: "iteration,j,j_dl,j_phy" rows.
void write_train_report_csv(const TrainReport& report, const std::string& path);

} // namespace tse
