#include "tse/pidl.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "tse/optimizer.hpp"
#include "tse/rng.hpp"

namespace tse {

namespace {

// Stream tags for deriving independent sampling seeds from one config seed.
constexpr std::uint64_t kObsStream = 0x0b5;
constexpr std::uint64_t kCollocStream = 0xc01;
constexpr std::uint64_t kInitStream = 0x171;
constexpr std::uint64_t kNoiseStream = 0x905e;

std::vector<std::size_t> segment_columns(const DensityField& field,
                                         const CorridorSpec& corridor,
                                         std::size_t segment_index) {
    if (segment_index >= corridor.segments.size())
        throw std::out_of_range("segment index outside corridor");
    std::vector<std::size_t> cols;
    for (std::size_t i = 0; i < field.nx; ++i) {
        const double x = field.x_at(i);
        if (x < 0.0 || x > corridor.length) continue;
        if (segment_index_at(x, corridor) == segment_index) cols.push_back(i);
    }
    if (cols.empty()) throw std::runtime_error("segment owns no grid columns");
    return cols;
}

} // namespace

void PidlConfig::validate() const {
    if (mu < 0.0 || mu > 1.0) throw std::invalid_argument("mu must be in [0, 1]");
    if (n_observations < 0 || n_collocation < 0)
        throw std::invalid_argument("sample counts must be nonnegative");
    if (iterations < 0) throw std::invalid_argument("iterations must be nonnegative");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
    if (log_interval < 1) throw std::invalid_argument("log interval must be >= 1");
}

ObservationSet sample_observations(const DensityField& field, const CorridorSpec& corridor,
                                   std::size_t segment_index, std::size_t n,
                                   std::uint64_t seed) {
    const auto cols = segment_columns(field, corridor, segment_index);
    const std::size_t available = cols.size() * field.nt;
    if (n > available)
        throw std::invalid_argument("requested more observations than grid points in segment");

    ObservationSet set;
    set.segment_index = static_cast<int>(segment_index);
    set.points.reserve(n);
    Rng rng(seed);
    for (std::size_t flat : rng.sample_without_replacement(available, n)) {
        const std::size_t k = flat / cols.size();
        const std::size_t i = cols[flat % cols.size()];
        set.points.push_back({field.x_at(i), field.t_at(k), field.at(k, i)});
    }
    return set;
}

CollocationSet sample_collocation(const SegmentSpec& seg, double horizon, std::size_t n,
                                  std::uint64_t seed) {
    if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
    CollocationSet set;
    set.segment_index = seg.index - 1;
    set.points.reserve(n);
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = rng.uniform(seg.x_start, seg.x_end);
        const double t = rng.uniform(0.0, horizon);
        set.points.push_back({x, t});
    }
    return set;
}

double physics_residual(const EvalRecord& record, const SegmentSpec& seg) {
    return record.d_rho_dt +
           seg.v_f * (1.0 - 2.0 * record.rho_hat / seg.rho_m) * record.d_rho_dx;
}

double pidl_cost(double mu, double j_phy, double j_dl) {
    if (mu < 0.0 || mu > 1.0) throw std::invalid_argument("mu must be in [0, 1]");
    return mu * j_phy + (1.0 - mu) * j_dl;
}

// ---------------------------------------------------------------------------
// PidlObjective
// ---------------------------------------------------------------------------

PidlObjective::PidlObjective(NetworkSpec spec, InputMap map, const CorridorSpec& corridor,
                             ObservationSet observations, CollocationSet collocation,
                             double mu)
    : spec_(std::move(spec)), mu_(mu), n_obs_(observations.points.size()) {
    if (mu_ < 0.0 || mu_ > 1.0) throw std::invalid_argument("mu must be in [0, 1]");
    if (observations.points.empty())
        throw std::invalid_argument("objective requires at least one observation");
    if (collocation.points.empty() && mu_ > 0.0)
        throw std::invalid_argument("mu > 0 requires a nonempty collocation set");

    BatchPoints pts;
    const std::size_t total = n_obs_ + collocation.points.size();
    pts.x.reserve(total);
    pts.t.reserve(total);
    if (spec_.output_squash) pts.rho_scale.reserve(total);
    obs_rho_.reserve(n_obs_);
    for (const auto& p : observations.points) {
        pts.x.push_back(p.x);
        pts.t.push_back(p.t);
        if (spec_.output_squash)
            pts.rho_scale.push_back(segment_at(p.x, corridor).rho_m);
        obs_rho_.push_back(p.rho);
    }
    colloc_vf_.reserve(collocation.points.size());
    colloc_rho_m_.reserve(collocation.points.size());
    for (const auto& p : collocation.points) {
        const auto& seg = segment_at(p.x, corridor);
        pts.x.push_back(p.x);
        pts.t.push_back(p.t);
        if (spec_.output_squash) pts.rho_scale.push_back(seg.rho_m);
        colloc_vf_.push_back(seg.v_f);
        colloc_rho_m_.push_back(seg.rho_m);
    }

    adjoint_.d_rho.assign(total, 0.0);
    adjoint_.d_d_rho_dx.assign(total, 0.0);
    adjoint_.d_d_rho_dt.assign(total, 0.0);
    evaluator_ = std::make_unique<NetworkEvaluator>(spec_, map, std::move(pts));
}

PidlObjective::~PidlObjective() = default;
PidlObjective::PidlObjective(PidlObjective&&) noexcept = default;

PidlObjective::Value PidlObjective::costs(const BatchEval& eval, BatchAdjoint* adjoint) {
    Value v;
    const std::size_t n_col = colloc_vf_.size();

    for (std::size_t i = 0; i < n_obs_; ++i) {
        const double err = eval.rho[i] - obs_rho_[i];
        v.j_dl += err * err;
        if (adjoint) {
            adjoint->d_rho[i] = (1.0 - mu_) * 2.0 * err / static_cast<double>(n_obs_);
            adjoint->d_d_rho_dx[i] = 0.0;
            adjoint->d_d_rho_dt[i] = 0.0;
        }
    }
    v.j_dl /= static_cast<double>(n_obs_);

    for (std::size_t c = 0; c < n_col; ++c) {
        const std::size_t i = n_obs_ + c;
        const double wave = colloc_vf_[c] * (1.0 - 2.0 * eval.rho[i] / colloc_rho_m_[c]);
        const double r = eval.d_rho_dt[i] + wave * eval.d_rho_dx[i];
        v.j_phy += r * r;
        if (adjoint) {
            const double common = mu_ * 2.0 * r / static_cast<double>(n_col);
            adjoint->d_rho[i] =
                common * (-2.0 * colloc_vf_[c] / colloc_rho_m_[c]) * eval.d_rho_dx[i];
            adjoint->d_d_rho_dx[i] = common * wave;
            adjoint->d_d_rho_dt[i] = common;
        }
    }
    if (n_col > 0) v.j_phy /= static_cast<double>(n_col);

    v.j = pidl_cost(mu_, v.j_phy, v.j_dl);
    return v;
}

PidlObjective::Value PidlObjective::evaluate(const ParamVector& params) {
    return costs(evaluator_->evaluate(params), nullptr);
}

PidlObjective::Value PidlObjective::evaluate_with_gradient(const ParamVector& params,
                                                           ParamVector& grad) {
    const Value v = costs(evaluator_->evaluate(params), &adjoint_);
    grad = evaluator_->backward(adjoint_);
    return v;
}

double physics_cost(const ParamVector& params, const NetworkSpec& spec, const InputMap& map,
                    const CollocationSet& collocation, const SegmentSpec& seg) {
    if (collocation.points.empty())
        throw std::invalid_argument("physics cost over an empty collocation set");
    BatchPoints pts;
    pts.x.reserve(collocation.points.size());
    pts.t.reserve(collocation.points.size());
    for (const auto& p : collocation.points) {
        pts.x.push_back(p.x);
        pts.t.push_back(p.t);
    }
    NetworkEvaluator ev(spec, map, std::move(pts));
    const BatchEval& e = ev.evaluate(params);
    double sum = 0.0;
    for (std::size_t i = 0; i < collocation.points.size(); ++i) {
        const EvalRecord rec{e.rho[i], e.d_rho_dx[i], e.d_rho_dt[i]};
        const double r = physics_residual(rec, seg);
        sum += r * r;
    }
    return sum / static_cast<double>(collocation.points.size());
}

double data_cost(const ParamVector& params, const NetworkSpec& spec, const InputMap& map,
                 const ObservationSet& observations) {
    if (observations.points.empty())
        throw std::invalid_argument("data cost over an empty observation set");
    BatchPoints pts;
    pts.x.reserve(observations.points.size());
    pts.t.reserve(observations.points.size());
    for (const auto& p : observations.points) {
        pts.x.push_back(p.x);
        pts.t.push_back(p.t);
    }
    NetworkEvaluator ev(spec, map, std::move(pts));
    const BatchEval& e = ev.evaluate(params);
    double sum = 0.0;
    for (std::size_t i = 0; i < observations.points.size(); ++i) {
        const double err = e.rho[i] - observations.points[i].rho;
        sum += err * err;
    }
    return sum / static_cast<double>(observations.points.size());
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

TrainOutcome train_pidl(PidlObjective& objective, ParamVector initial_params,
                        const PidlConfig& config) {
    config.validate();
    const auto start = std::chrono::steady_clock::now();

    TrainOutcome outcome;
    outcome.params = std::move(initial_params);
    ParamVector grad;

    auto log_costs = [&](long iteration, const PidlObjective::Value& v) {
        if (!std::isfinite(v.j))
            throw TrainingDiverged(iteration, "training loss became non-finite at iteration " +
                                                  std::to_string(iteration));
        outcome.report.trajectory.push_back({iteration, v.j, v.j_dl, v.j_phy});
    };

    log_costs(0, objective.evaluate(outcome.params));

    AdamOptimizer adam(outcome.params.size(), config.learning_rate, config.adam_beta1,
                       config.adam_beta2, config.adam_epsilon);
    for (long it = 1; it <= config.iterations; ++it) {
        PidlObjective::Value v;
        try {
            v = objective.evaluate_with_gradient(outcome.params, grad);
        } catch (const std::runtime_error& e) {
            throw TrainingDiverged(it, std::string(e.what()) + " at iteration " +
                                           std::to_string(it));
        }
        if (!std::isfinite(v.j))
            throw TrainingDiverged(it, "training loss became non-finite at iteration " +
                                           std::to_string(it));
        adam.step(outcome.params, grad);
        if (it % config.log_interval == 0 || it == config.iterations)
            log_costs(it, objective.evaluate(outcome.params));
    }

    outcome.report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return outcome;
}

TrainOutcome train_pidl(const DensityField& truth, const CorridorSpec& corridor,
                        std::size_t segment_index, const PidlConfig& config,
                        const NetworkSpec& spec) {
    config.validate();
    if (segment_index >= corridor.segments.size())
        throw std::out_of_range("segment index outside corridor");
    const SegmentSpec& seg = corridor.segments[segment_index];

    ObservationSet obs =
        sample_observations(truth, corridor, segment_index,
                            static_cast<std::size_t>(config.n_observations),
                            mix_seed(config.seed, kObsStream));
    if (config.observation_noise > 0.0) {
        Rng rng(mix_seed(config.seed, kNoiseStream));
        for (auto& p : obs.points) {
            p.rho = std::clamp(p.rho + config.observation_noise * rng.gaussian(), 0.0,
                               seg.rho_m);
        }
    }
    CollocationSet colloc =
        sample_collocation(seg, corridor.horizon, static_cast<std::size_t>(config.n_collocation),
                           mix_seed(config.seed, kCollocStream));

    NetworkSpec net = spec;
    if (net.output_squash) net.rho_scale = seg.rho_m;
    const InputMap map{seg.x_start, seg.x_end, 0.0, corridor.horizon};

    PidlObjective objective(net, map, corridor, std::move(obs), std::move(colloc), config.mu);
    ParamVector init = init_network(net, mix_seed(config.seed, kInitStream));
    TrainOutcome outcome = train_pidl(objective, std::move(init), config);

    const DensityField truth_slice = extract_segment(truth, corridor, segment_index);
    double denom = 0.0;
    for (double v : truth_slice.values) denom += v * v;
    if (denom > 0.0) {
        const DensityField est = network_field(outcome.params, net, map, corridor, truth_slice);
        outcome.report.final_relative_l2 = relative_l2_error(est, truth_slice);
    }
    return outcome;
}

double relative_l2_error(const DensityField& estimate, const DensityField& truth) {
    if (!estimate.same_grid(truth))
        throw std::invalid_argument("relative L2 error requires identical grids");
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < truth.values.size(); ++i) {
        const double e = estimate.values[i] - truth.values[i];
        num += e * e;
        den += truth.values[i] * truth.values[i];
    }
    if (den == 0.0) throw std::domain_error("relative L2 error undefined for all-zero truth");
    return std::sqrt(num) / std::sqrt(den);
}

DensityField extract_segment(const DensityField& field, const CorridorSpec& corridor,
                             std::size_t segment_index) {
    const auto cols = segment_columns(field, corridor, segment_index);
    DensityField out;
    out.nx = cols.size();
    out.nt = field.nt;
    out.dx = field.dx;
    out.dt = field.dt;
    out.x0 = field.x_at(cols.front());
    out.t0 = field.t0;
    out.values.resize(out.nx * out.nt);
    for (std::size_t k = 0; k < field.nt; ++k)
        for (std::size_t i = 0; i < cols.size(); ++i)
            out.at(k, i) = field.at(k, cols[i]);
    return out;
}

DensityField network_field(const ParamVector& params, const NetworkSpec& spec,
                           const InputMap& map, const CorridorSpec& corridor,
                           const DensityField& grid_like) {
    DensityField out = grid_like;
    BatchPoints row;
    row.x.resize(out.nx);
    row.t.resize(out.nx);
    if (spec.output_squash) row.rho_scale.resize(out.nx);
    for (std::size_t i = 0; i < out.nx; ++i) {
        row.x[i] = out.x_at(i);
        if (spec.output_squash) row.rho_scale[i] = segment_at(row.x[i], corridor).rho_m;
    }
    for (std::size_t k = 0; k < out.nt; ++k) {
        std::fill(row.t.begin(), row.t.end(), out.t_at(k));
        const std::vector<double> values = forward_values(params, spec, map, row);
        std::copy(values.begin(), values.end(), out.values.begin() + k * out.nx);
    }
    return out;
}

void write_train_report_csv(const TrainReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << "iteration,j,j_dl,j_phy\n";
    char buf[128];
    for (const auto& s : report.trajectory) {
        std::snprintf(buf, sizeof(buf), "%ld,%.17g,%.17g,%.17g\n", s.iteration, s.j, s.j_dl,
                      s.j_phy);
        out << buf;
    }
    if (!out) throw std::runtime_error("failed writing " + path);
}

} // namespace tse
