#include "tse/network.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "tse/rng.hpp"

namespace tse {

namespace {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Arr = Eigen::ArrayXd;
using RowMajorMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::vector<int> layer_dims(const NetworkSpec& spec) {
    std::vector<int> dims;
    dims.reserve(spec.hidden_layers.size() + 2);
    dims.push_back(2);
    for (int w : spec.hidden_layers) dims.push_back(w);
    dims.push_back(1);
    return dims;
}

struct LayerView {
    Eigen::Map<const RowMajorMat> w;
    Eigen::Map<const Vec> b;
};

LayerView layer_view(const double* base, std::size_t offset, int out, int in) {
    return {Eigen::Map<const RowMajorMat>(base + offset, out, in),
            Eigen::Map<const Vec>(base + offset + static_cast<std::size_t>(out) * in, out)};
}

} // namespace

std::string to_string(Activation a) {
    switch (a) {
        case Activation::Tanh: return "tanh";
    }
    throw std::logic_error("unknown activation");
}

Activation activation_from_string(const std::string& name) {
    if (name == "tanh") return Activation::Tanh;
    throw std::invalid_argument("unknown activation '" + name + "'");
}

void NetworkSpec::validate() const {
    for (int w : hidden_layers)
        if (w < 1) throw std::invalid_argument("hidden layer widths must be >= 1");
    if (output_squash && !(rho_scale > 0.0))
        throw std::invalid_argument("rho_scale must be positive when output_squash is on");
}

std::size_t param_count(const NetworkSpec& spec) {
    spec.validate();
    const auto dims = layer_dims(spec);
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l)
        n += static_cast<std::size_t>(dims[l + 1]) * dims[l] + dims[l + 1];
    return n;
}

ParamVector init_network(const NetworkSpec& spec, std::uint64_t seed) {
    spec.validate();
    const auto dims = layer_dims(spec);
    ParamVector params(param_count(spec), 0.0);
    Rng rng(seed);
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const int in = dims[l];
        const int out = dims[l + 1];
        const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
        for (int i = 0; i < out * in; ++i) params[off + i] = rng.uniform(-bound, bound);
        off += static_cast<std::size_t>(out) * in + out; // biases stay zero
    }
    return params;
}

// ---------------------------------------------------------------------------
// Batched evaluator.
//
// Forward state per point: the activation value a and its two input-tangent
// streams u_x = da/dxn, u_t = da/dtn, propagated by forward-mode rules. The
// reverse pass differentiates this augmented computation, which is where the
// activation second derivative enters: losses on d_rho/dx, d_rho/dt get exact
// parameter gradients.
// ---------------------------------------------------------------------------

struct NetworkEvaluator::Impl {
    NetworkSpec spec;
    InputMap map;
    std::vector<int> dims;
    std::size_t n_params = 0;
    Eigen::Index batch = 0;

    Mat x_in;    // batch x 2, normalized inputs
    Mat ux_in;   // batch x 2, d(input)/dxn = (1, 0)
    Mat ut_in;   // batch x 2, d(input)/dtn = (0, 1)
    Arr scale;   // per-point squash scale

    // Tape, hidden layers only: tanh value and pre/post-activation tangents.
    std::vector<Mat> act;   // a_l = tanh(z_l)
    std::vector<Mat> vx;    // pre-activation tangent streams
    std::vector<Mat> vt;
    std::vector<Mat> ux;    // post-activation tangent streams
    std::vector<Mat> ut;

    // Output head tape.
    Arr y;
    Arr y_vx;
    Arr y_vt;
    Arr sig;

    ParamVector params_snapshot;
    bool tape_valid = false;
    BatchEval out;

    Impl(NetworkSpec s, InputMap m, BatchPoints pts)
        : spec(std::move(s)), map(m), dims(layer_dims(spec)) {
        spec.validate();
        n_params = param_count(spec);
        if (pts.t.size() != pts.x.size())
            throw std::invalid_argument("batch x/t size mismatch");
        if (!pts.rho_scale.empty() && pts.rho_scale.size() != pts.x.size())
            throw std::invalid_argument("batch rho_scale size mismatch");
        batch = static_cast<Eigen::Index>(pts.x.size());
        if (batch == 0) throw std::invalid_argument("empty evaluation batch");

        x_in.resize(batch, 2);
        ux_in = Mat::Zero(batch, 2);
        ut_in = Mat::Zero(batch, 2);
        ux_in.col(0).setOnes();
        ut_in.col(1).setOnes();
        scale.resize(batch);
        for (Eigen::Index i = 0; i < batch; ++i) {
            x_in(i, 0) = map.x_norm(pts.x[static_cast<std::size_t>(i)]);
            x_in(i, 1) = map.t_norm(pts.t[static_cast<std::size_t>(i)]);
            scale[i] = pts.rho_scale.empty() ? spec.rho_scale
                                             : pts.rho_scale[static_cast<std::size_t>(i)];
        }

        const std::size_t n_hidden = spec.hidden_layers.size();
        act.resize(n_hidden);
        vx.resize(n_hidden);
        vt.resize(n_hidden);
        ux.resize(n_hidden);
        ut.resize(n_hidden);
        for (std::size_t l = 0; l < n_hidden; ++l) {
            act[l].resize(batch, dims[l + 1]);
            vx[l].resize(batch, dims[l + 1]);
            vt[l].resize(batch, dims[l + 1]);
            ux[l].resize(batch, dims[l + 1]);
            ut[l].resize(batch, dims[l + 1]);
        }
        y.resize(batch);
        y_vx.resize(batch);
        y_vt.resize(batch);
        sig.resize(batch);
        out.rho.resize(static_cast<std::size_t>(batch));
        out.d_rho_dx.resize(static_cast<std::size_t>(batch));
        out.d_rho_dt.resize(static_cast<std::size_t>(batch));
    }

    std::size_t layer_offset(std::size_t layer) const {
        std::size_t off = 0;
        for (std::size_t l = 0; l < layer; ++l)
            off += static_cast<std::size_t>(dims[l + 1]) * dims[l] + dims[l + 1];
        return off;
    }

    void forward(const ParamVector& params) {
        if (params.size() != n_params)
            throw std::invalid_argument("parameter vector length does not match network spec");

        const Mat* a_prev = &x_in;
        const Mat* ux_prev = &ux_in;
        const Mat* ut_prev = &ut_in;

        const std::size_t n_hidden = spec.hidden_layers.size();
        std::size_t off = 0;
        for (std::size_t l = 0; l < n_hidden; ++l) {
            const int in = dims[l];
            const int width = dims[l + 1];
            const auto layer = layer_view(params.data(), off, width, in);
            off += static_cast<std::size_t>(width) * in + width;

            Mat z = (*a_prev) * layer.w.transpose();
            z.rowwise() += layer.b.transpose();
            vx[l].noalias() = (*ux_prev) * layer.w.transpose();
            vt[l].noalias() = (*ut_prev) * layer.w.transpose();

            act[l] = z.array().tanh().matrix();
            const auto dphi = (1.0 - act[l].array().square());
            ux[l] = (dphi * vx[l].array()).matrix();
            ut[l] = (dphi * vt[l].array()).matrix();

            a_prev = &act[l];
            ux_prev = &ux[l];
            ut_prev = &ut[l];
        }

        const auto head = layer_view(params.data(), off, 1, dims[n_hidden]);
        y = ((*a_prev) * head.w.transpose()).col(0).array() + head.b[0];
        y_vx = ((*ux_prev) * head.w.transpose()).col(0).array();
        y_vt = ((*ut_prev) * head.w.transpose()).col(0).array();

        const double sx = map.dxn_dx();
        const double st = map.dtn_dt();
        Arr rho, ddx, ddt;
        if (spec.output_squash) {
            sig = 1.0 / (1.0 + (-y).exp());
            const Arr dsig = sig * (1.0 - sig);
            rho = sig * scale;
            ddx = dsig * y_vx * (sx * scale);
            ddt = dsig * y_vt * (st * scale);
        } else {
            rho = y;
            ddx = y_vx * sx;
            ddt = y_vt * st;
        }
        for (Eigen::Index i = 0; i < batch; ++i) {
            if (!std::isfinite(rho[i]) || !std::isfinite(ddx[i]) || !std::isfinite(ddt[i])) {
                std::ostringstream msg;
                msg << "network evaluation produced non-finite output at batch index " << i;
                throw std::runtime_error(msg.str());
            }
            out.rho[static_cast<std::size_t>(i)] = rho[i];
            out.d_rho_dx[static_cast<std::size_t>(i)] = ddx[i];
            out.d_rho_dt[static_cast<std::size_t>(i)] = ddt[i];
        }
        params_snapshot = params;
        tape_valid = true;
    }

    ParamVector backward(const BatchAdjoint& adj) const {
        if (!tape_valid) throw std::logic_error("backward() before evaluate()");
        const auto b = static_cast<std::size_t>(batch);
        if (adj.d_rho.size() != b || adj.d_d_rho_dx.size() != b || adj.d_d_rho_dt.size() != b)
            throw std::invalid_argument("adjoint size does not match batch");

        Eigen::Map<const Arr> g_rho(adj.d_rho.data(), batch);
        Eigen::Map<const Arr> g_ddx(adj.d_d_rho_dx.data(), batch);
        Eigen::Map<const Arr> g_ddt(adj.d_d_rho_dt.data(), batch);

        const double sx = map.dxn_dx();
        const double st = map.dtn_dt();

        // Reverse through the output head into (y, y_vx, y_vt) adjoints.
        Arr y_bar, vx_bar, vt_bar;
        if (spec.output_squash) {
            const Arr dsig = sig * (1.0 - sig);
            const Arr d2sig = dsig * (1.0 - 2.0 * sig);
            y_bar = scale * (g_rho * dsig + d2sig * (sx * g_ddx * y_vx + st * g_ddt * y_vt));
            vx_bar = scale * sx * g_ddx * dsig;
            vt_bar = scale * st * g_ddt * dsig;
        } else {
            y_bar = g_rho;
            vx_bar = g_ddx * sx;
            vt_bar = g_ddt * st;
        }

        ParamVector grad(n_params, 0.0);
        const std::size_t n_hidden = spec.hidden_layers.size();

        Mat z_bar = y_bar.matrix();
        Mat zvx_bar = vx_bar.matrix();
        Mat zvt_bar = vt_bar.matrix();

        for (std::size_t l = n_hidden + 1; l-- > 0;) {
            const int in = dims[l];
            const int width = dims[l + 1];
            const std::size_t off = layer_offset(l);
            const auto layer = layer_view(params_snapshot.data(), off, width, in);

            const Mat& a_prev = l == 0 ? x_in : act[l - 1];
            const Mat& ux_prev = l == 0 ? ux_in : ux[l - 1];
            const Mat& ut_prev = l == 0 ? ut_in : ut[l - 1];

            Eigen::Map<RowMajorMat> gw(grad.data() + off, width, in);
            Eigen::Map<Vec> gb(grad.data() + off + static_cast<std::size_t>(width) * in, width);
            gw.noalias() = z_bar.transpose() * a_prev;
            gw.noalias() += zvx_bar.transpose() * ux_prev;
            gw.noalias() += zvt_bar.transpose() * ut_prev;
            gb = z_bar.colwise().sum();

            if (l == 0) break;

            Mat a_bar = z_bar * layer.w;
            Mat uxp_bar = zvx_bar * layer.w;
            Mat utp_bar = zvt_bar * layer.w;

            // Through the activation of layer l-1:
            //   a = tanh(z), u = phi'(z) v  =>
            //   z_bar = a_bar phi' + (ux_bar vx + ut_bar vt) phi''
            const auto& a = act[l - 1];
            const auto dphi = (1.0 - a.array().square());
            const auto d2phi = -2.0 * a.array() * dphi;
            z_bar = (a_bar.array() * dphi +
                     (uxp_bar.array() * vx[l - 1].array() +
                      utp_bar.array() * vt[l - 1].array()) *
                         d2phi)
                        .matrix();
            zvx_bar = (uxp_bar.array() * dphi).matrix();
            zvt_bar = (utp_bar.array() * dphi).matrix();
        }
        return grad;
    }
};

NetworkEvaluator::NetworkEvaluator(NetworkSpec spec, InputMap map, BatchPoints points)
    : impl_(std::make_unique<Impl>(std::move(spec), map, std::move(points))) {}
NetworkEvaluator::~NetworkEvaluator() = default;
NetworkEvaluator::NetworkEvaluator(NetworkEvaluator&&) noexcept = default;
NetworkEvaluator& NetworkEvaluator::operator=(NetworkEvaluator&&) noexcept = default;

const NetworkSpec& NetworkEvaluator::spec() const { return impl_->spec; }
std::size_t NetworkEvaluator::batch_size() const { return static_cast<std::size_t>(impl_->batch); }

const BatchEval& NetworkEvaluator::evaluate(const ParamVector& params) {
    impl_->forward(params);
    return impl_->out;
}

ParamVector NetworkEvaluator::backward(const BatchAdjoint& adjoint) const {
    return impl_->backward(adjoint);
}

double forward(const ParamVector& params, const NetworkSpec& spec, double x_norm,
               double t_norm) {
    // Default InputMap is the identity on [-1, 1], so the batched path sees
    // the raw inputs; single-point batch keeps this bit-identical with
    // forward_with_input_grads.
    BatchPoints pts;
    pts.x = {x_norm};
    pts.t = {t_norm};
    NetworkEvaluator ev(spec, InputMap{}, std::move(pts));
    return ev.evaluate(params).rho[0];
}

EvalRecord forward_with_input_grads(const ParamVector& params, const NetworkSpec& spec,
                                    const InputMap& map, double x, double t) {
    BatchPoints pts;
    pts.x = {x};
    pts.t = {t};
    NetworkEvaluator ev(spec, map, std::move(pts));
    const BatchEval& e = ev.evaluate(params);
    return {e.rho[0], e.d_rho_dx[0], e.d_rho_dt[0]};
}

std::vector<double> forward_values(const ParamVector& params, const NetworkSpec& spec,
                                   const InputMap& map, const BatchPoints& points) {
    spec.validate();
    if (params.size() != param_count(spec))
        throw std::invalid_argument("parameter vector length does not match network spec");
    if (points.t.size() != points.x.size())
        throw std::invalid_argument("batch x/t size mismatch");
    const auto batch = static_cast<Eigen::Index>(points.x.size());
    const auto dims = layer_dims(spec);

    Mat a(batch, 2);
    for (Eigen::Index i = 0; i < batch; ++i) {
        a(i, 0) = map.x_norm(points.x[static_cast<std::size_t>(i)]);
        a(i, 1) = map.t_norm(points.t[static_cast<std::size_t>(i)]);
    }

    std::size_t off = 0;
    for (std::size_t l = 0; l + 2 < dims.size(); ++l) {
        const auto layer = layer_view(params.data(), off, dims[l + 1], dims[l]);
        off += static_cast<std::size_t>(dims[l + 1]) * dims[l] + dims[l + 1];
        Mat z = a * layer.w.transpose();
        z.rowwise() += layer.b.transpose();
        a = z.array().tanh().matrix();
    }
    const auto head = layer_view(params.data(), off, 1, dims[dims.size() - 2]);
    Arr y = (a * head.w.transpose()).col(0).array() + head.b[0];

    std::vector<double> out(points.x.size());
    for (Eigen::Index i = 0; i < batch; ++i) {
        double v = y[i];
        if (spec.output_squash) {
            const double s = points.rho_scale.empty()
                                 ? spec.rho_scale
                                 : points.rho_scale[static_cast<std::size_t>(i)];
            v = s / (1.0 + std::exp(-v));
        }
        if (!std::isfinite(v))
            throw std::runtime_error("network evaluation produced non-finite output");
        out[static_cast<std::size_t>(i)] = v;
    }
    return out;
}

ParamVector loss_gradient(const ParamVector& params, const NetworkSpec& spec,
                          const InputMap& map, const BatchPoints& points,
                          const LossFn& loss, double* loss_out) {
    NetworkEvaluator ev(spec, map, points);
    const BatchEval& e = ev.evaluate(params);
    BatchAdjoint adj;
    adj.d_rho.assign(points.size(), 0.0);
    adj.d_d_rho_dx.assign(points.size(), 0.0);
    adj.d_d_rho_dt.assign(points.size(), 0.0);
    const double value = loss(e, adj);
    if (!std::isfinite(value)) throw std::runtime_error("loss evaluated to a non-finite value");
    if (loss_out) *loss_out = value;
    return ev.backward(adj);
}

double finite_diff_check(const ParamVector& params, const NetworkSpec& spec,
                         const InputMap& map, const BatchPoints& points,
                         const LossFn& loss, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("finite difference step must be positive");
    const ParamVector analytic = loss_gradient(params, spec, map, points, loss);

    NetworkEvaluator ev(spec, map, points);
    BatchAdjoint scratch;
    scratch.d_rho.assign(points.size(), 0.0);
    scratch.d_d_rho_dx.assign(points.size(), 0.0);
    scratch.d_d_rho_dt.assign(points.size(), 0.0);
    const auto eval_loss = [&](const ParamVector& p) { return loss(ev.evaluate(p), scratch); };

    ParamVector p = params;
    double worst = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = params[i] + h;
        const double j_plus = eval_loss(p);
        p[i] = params[i] - h;
        const double j_minus = eval_loss(p);
        p[i] = params[i];
        const double numeric = (j_plus - j_minus) / (2.0 * h);
        const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-12});
        worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
    }
    return worst;
}

void save_checkpoint(const std::string& path, const NetworkSpec& spec,
                     const ParamVector& params) {
    if (params.size() != param_count(spec))
        throw std::invalid_argument("parameter vector length does not match network spec");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << "2";
    for (int w : spec.hidden_layers) out << ',' << w;
    out << ",1," << to_string(spec.activation) << ',' << (spec.output_squash ? 1 : 0);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", spec.rho_scale);
    out << ',' << buf << '\n';
    for (std::size_t i = 0; i < params.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", params[i]);
        if (i) out << ',';
        out << buf;
    }
    out << '\n';
    if (!out) throw std::runtime_error("failed writing checkpoint " + path);
}

std::pair<NetworkSpec, ParamVector> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint " + path);
    std::string descriptor, values;
    if (!std::getline(in, descriptor) || !std::getline(in, values))
        throw std::runtime_error("truncated checkpoint " + path);

    std::vector<std::string> tokens;
    {
        std::istringstream ds(descriptor);
        std::string tok;
        while (std::getline(ds, tok, ',')) tokens.push_back(tok);
    }
    if (tokens.size() < 5) throw std::runtime_error("malformed checkpoint descriptor in " + path);

    std::vector<int> dims;
    std::size_t pos = 0;
    while (pos < tokens.size()) {
        char* end = nullptr;
        const long v = std::strtol(tokens[pos].c_str(), &end, 10);
        if (end == tokens[pos].c_str() || *end != '\0') break;
        dims.push_back(static_cast<int>(v));
        ++pos;
    }
    if (dims.size() < 2 || dims.front() != 2 || dims.back() != 1 || pos + 3 != tokens.size())
        throw std::runtime_error("malformed checkpoint descriptor in " + path);

    NetworkSpec spec;
    spec.hidden_layers.assign(dims.begin() + 1, dims.end() - 1);
    spec.activation = activation_from_string(tokens[pos]);
    spec.output_squash = std::stoi(tokens[pos + 1]) != 0;
    spec.rho_scale = std::strtod(tokens[pos + 2].c_str(), nullptr);

    ParamVector params;
    params.reserve(param_count(spec));
    const char* p = values.c_str();
    while (*p) {
        char* end = nullptr;
        params.push_back(std::strtod(p, &end));
        if (end == p) throw std::runtime_error("malformed checkpoint values in " + path);
        p = (*end == ',') ? end + 1 : end;
    }
    if (params.size() != param_count(spec))
        throw std::runtime_error("checkpoint value count does not match descriptor in " + path);
    return {spec, params};
}

} // namespace tse
