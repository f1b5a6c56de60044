#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace tse {

enum class Activation { Tanh };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

/// Feedforward density estimator: 2 inputs (normalized x, t), one output.
/// With output_squash the raw output is passed through a logistic squash and
/// scaled by rho_scale, so estimates stay strictly inside (0, rho_scale).
struct NetworkSpec {
    std::vector<int> hidden_layers{32, 32, 32, 32};
    Activation activation = Activation::Tanh;
    bool output_squash = true;
    double rho_scale = 1.0;

    void validate() const;
};

/// Flat trainable parameters. Canonical order: for each linear layer in
/// input-to-output order, the weight matrix row-major (out x in), then the
/// bias vector.
using ParamVector = std::vector<double>;

std::size_t param_count(const NetworkSpec& spec);

/// Affine map of physical coordinates onto [-1, 1]^2 network inputs.
struct InputMap {
    double x_min = -1.0;
    double x_max = 1.0;
    double t_min = -1.0;
    double t_max = 1.0;

    double x_norm(double x) const { return 2.0 * (x - x_min) / (x_max - x_min) - 1.0; }
    double t_norm(double t) const { return 2.0 * (t - t_min) / (t_max - t_min) - 1.0; }
    double dxn_dx() const { return 2.0 / (x_max - x_min); }
    double dtn_dt() const { return 2.0 / (t_max - t_min); }
};

/// Network output and its first derivatives with respect to the physical
/// coordinates (chain-ruled through the input map).
struct EvalRecord {
    double rho_hat = 0.0;
    double d_rho_dx = 0.0;
    double d_rho_dt = 0.0;
};

/// Deterministic scaled-uniform initialization: per layer, weights uniform in
/// [-b, b] with b = sqrt(6 / (fan_in + fan_out)), biases zero.
ParamVector init_network(const NetworkSpec& spec, std::uint64_t seed);

/// Raw network evaluation on already-normalized inputs.
double forward(const ParamVector& params, const NetworkSpec& spec, double x_norm,
               double t_norm);

/// Evaluation at physical (x, t) with input derivatives.
EvalRecord forward_with_input_grads(const ParamVector& params, const NetworkSpec& spec,
                                    const InputMap& map, double x, double t);

/// A batch of physical evaluation points. rho_scale optionally overrides the
/// squash scale per point (used when one network spans segments with
/// different jam densities); empty means spec.rho_scale everywhere.
struct BatchPoints {
    std::vector<double> x;
    std::vector<double> t;
    std::vector<double> rho_scale;

    std::size_t size() const { return x.size(); }
};

struct BatchEval {
    std::vector<double> rho;
    std::vector<double> d_rho_dx;
    std::vector<double> d_rho_dt;
};

/// Adjoints of a scalar loss with respect to each batch output.
struct BatchAdjoint {
    std::vector<double> d_rho;
    std::vector<double> d_d_rho_dx;
    std::vector<double> d_d_rho_dt;
};

/// Scalar loss over a batch evaluation. Fills the adjoint structure (already
/// sized to the batch) and returns the loss value.
using LossFn = std::function<double(const BatchEval&, BatchAdjoint&)>;

/// Batched forward + reverse engine for one fixed point set. The forward
/// pass propagates input-tangent streams alongside activations; the reverse
/// pass differentiates the tangent-augmented computation, so parameter
/// gradients of losses built on d_rho_dx / d_rho_dt are exact.
/// One instance per training job; calls are not thread-safe.
class NetworkEvaluator {
public:
    NetworkEvaluator(NetworkSpec spec, InputMap map, BatchPoints points);
    ~NetworkEvaluator();
    NetworkEvaluator(NetworkEvaluator&&) noexcept;
    NetworkEvaluator& operator=(NetworkEvaluator&&) noexcept;

    const NetworkSpec& spec() const;
    std::size_t batch_size() const;

    /// Forward pass; the internal tape is retained for backward().
    const BatchEval& evaluate(const ParamVector& params);

    /// Parameter gradient of sum_i(adjoint_i . outputs_i) for the most recent
    /// evaluate() call.
    ParamVector backward(const BatchAdjoint& adjoint) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Values-only batched evaluation: no derivative streams, no tape. Used for
/// dense grid evaluation where only rho is needed.
std::vector<double> forward_values(const ParamVector& params, const NetworkSpec& spec,
                                   const InputMap& map, const BatchPoints& points);

/// Gradient of loss(outputs(params)) with respect to every parameter.
/// loss_out, when given, receives the loss value.
ParamVector loss_gradient(const ParamVector& params, const NetworkSpec& spec,
                          const InputMap& map, const BatchPoints& points,
                          const LossFn& loss, double* loss_out = nullptr);

/// Compares loss_gradient against central finite differences component-wise
/// and returns the worst relative error, with denominator
/// max(|analytic|, |numeric|, 1e-12).
double finite_diff_check(const ParamVector& params, const NetworkSpec& spec,
                         const InputMap& map, const BatchPoints& points,
                         const LossFn& loss, double h);

/// Checkpoint: one descriptor line, then the flat parameter CSV.
void save_checkpoint(const std::string& path, const NetworkSpec& spec,
                     const ParamVector& params);
std::pair<NetworkSpec, ParamVector> load_checkpoint(const std::string& path);

} // namespace tse
