#include "tse/ensemble.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "tse/optimizer.hpp"
#include "tse/rng.hpp"

namespace tse {

namespace {

constexpr std::uint64_t kObsStream = 0xe0b5;
constexpr std::uint64_t kCollocStream = 0xec01;
constexpr std::uint64_t kSplitStream = 0xe5b1;
constexpr std::uint64_t kNoiseStream = 0xe905;
constexpr std::uint64_t kRetryStream = 0xe7e7;

using Mat = Eigen::MatrixXd;
using RowMajorMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::vector<std::size_t> seed_sorted_order(const TeacherEnsemble& ensemble) {
    std::vector<std::size_t> order(ensemble.members.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return ensemble.members[a].init_seed < ensemble.members[b].init_seed;
    });
    return order;
}

} // namespace

std::vector<CharacteristicClass> corridor_classes(const CorridorSpec& corridor) {
    std::vector<CharacteristicClass> classes;
    for (const auto& seg : corridor.segments) {
        const bool seen = std::any_of(classes.begin(), classes.end(), [&](const auto& c) {
            return c.v_f == seg.v_f && c.rho_m == seg.rho_m;
        });
        if (!seen)
            classes.push_back({static_cast<int>(classes.size()), seg.v_f, seg.rho_m});
    }
    return classes;
}

int true_class_of_segment(const CorridorSpec& corridor, std::size_t segment_index,
                          const std::vector<CharacteristicClass>& classes) {
    const auto& seg = corridor.segments.at(segment_index);
    for (const auto& c : classes)
        if (c.v_f == seg.v_f && c.rho_m == seg.rho_m) return c.class_id;
    throw std::invalid_argument("segment characteristics not present in class list");
}

std::vector<double> ensemble_weights(const std::vector<double>& validation_losses) {
    if (validation_losses.empty())
        throw std::invalid_argument("ensemble weights require at least one loss");
    std::vector<double> weights(validation_losses.size());
    double total = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (validation_losses[i] < 0.0)
            throw std::invalid_argument("validation losses must be nonnegative");
        weights[i] = 1.0 / std::max(validation_losses[i], 1e-12);
        total += weights[i];
    }
    for (double& w : weights) w /= total;
    return weights;
}

TeacherEnsemble train_teacher_ensemble(const DensityField& truth, const CorridorSpec& corridor,
                                       std::size_t segment_index, int member_count,
                                       const PidlConfig& base_config, const NetworkSpec& spec,
                                       std::uint64_t seed) {
    if (member_count < 1) throw std::invalid_argument("ensemble needs at least one member");
    base_config.validate();
    const SegmentSpec& seg = corridor.segments.at(segment_index);

    ObservationSet obs = sample_observations(
        truth, corridor, segment_index, static_cast<std::size_t>(base_config.n_observations),
        mix_seed(seed, kObsStream));
    if (obs.points.size() < 2)
        throw std::invalid_argument("ensemble training needs at least two observations");
    if (base_config.observation_noise > 0.0) {
        Rng rng(mix_seed(seed, kNoiseStream));
        for (auto& p : obs.points)
            p.rho = std::clamp(p.rho + base_config.observation_noise * rng.gaussian(), 0.0,
                               seg.rho_m);
    }

    // Shared 80/20 split: every member trains on the same points and is
    // scored on the same held-out set.
    Rng split_rng(mix_seed(seed, kSplitStream));
    const auto perm =
        split_rng.sample_without_replacement(obs.points.size(), obs.points.size());
    const auto n_val = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(0.2 * static_cast<double>(obs.points.size()))));
    ObservationSet train_obs, val_obs;
    train_obs.segment_index = val_obs.segment_index = obs.segment_index;
    for (std::size_t i = 0; i < perm.size(); ++i)
        (i < n_val ? val_obs : train_obs).points.push_back(obs.points[perm[i]]);

    CollocationSet colloc = sample_collocation(
        seg, corridor.horizon, static_cast<std::size_t>(base_config.n_collocation),
        mix_seed(seed, kCollocStream));

    NetworkSpec net = spec;
    if (net.output_squash) net.rho_scale = seg.rho_m;
    const InputMap map{seg.x_start, seg.x_end, 0.0, corridor.horizon};

    TeacherEnsemble ensemble;
    ensemble.segment_index = static_cast<int>(segment_index);
    ensemble.normalization = map;

    std::vector<double> losses;
    for (int k = 0; k < member_count; ++k) {
        const std::uint64_t init_seed = seed + static_cast<std::uint64_t>(k);
        PidlObjective objective(net, map, corridor, train_obs, colloc, base_config.mu);
        TrainOutcome outcome;
        try {
            outcome = train_pidl(objective, init_network(net, init_seed), base_config);
        } catch (const TrainingDiverged&) {
            // One retry with a fresh initialization; a second divergence is
            // the caller's problem.
            outcome = train_pidl(objective,
                                 init_network(net, mix_seed(init_seed, kRetryStream)),
                                 base_config);
        }
        TeacherMember member;
        member.params = std::move(outcome.params);
        member.spec = net;
        member.init_seed = init_seed;
        member.validation_loss = data_cost(member.params, net, map, val_obs);
        losses.push_back(member.validation_loss);
        ensemble.members.push_back(std::move(member));
    }
    ensemble.weights = ensemble_weights(losses);
    return ensemble;
}

double ensemble_predict(const TeacherEnsemble& ensemble, double x, double t) {
    if (ensemble.members.empty()) throw std::invalid_argument("empty ensemble");
    BatchPoints pt;
    pt.x = {x};
    pt.t = {t};
    double sum = 0.0;
    for (std::size_t idx : seed_sorted_order(ensemble)) {
        const auto& m = ensemble.members[idx];
        sum += ensemble.weights[idx] *
               forward_values(m.params, m.spec, ensemble.normalization, pt)[0];
    }
    return sum;
}

DensityField ensemble_field(const TeacherEnsemble& ensemble, const CorridorSpec& corridor,
                            const DensityField& grid_like) {
    if (ensemble.members.empty()) throw std::invalid_argument("empty ensemble");
    DensityField out = grid_like;
    std::fill(out.values.begin(), out.values.end(), 0.0);
    for (std::size_t idx : seed_sorted_order(ensemble)) {
        const auto& m = ensemble.members[idx];
        const DensityField member_field =
            network_field(m.params, m.spec, ensemble.normalization, corridor, grid_like);
        const double w = ensemble.weights[idx];
        for (std::size_t i = 0; i < out.values.size(); ++i)
            out.values[i] += w * member_field.values[i];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Classifier
// ---------------------------------------------------------------------------

std::vector<FeatureVector> build_classifier_features(const ObservationSet& obs,
                                                     const CorridorSpec& corridor) {
    if (obs.points.empty())
        throw std::invalid_argument("cannot build features from an empty observation set");
    const std::size_t n = obs.points.size();

    double mean_rho = 0.0;
    double max_rho = 0.0;
    for (const auto& p : obs.points) {
        mean_rho += p.rho;
        max_rho = std::max(max_rho, p.rho);
    }
    mean_rho /= static_cast<double>(n);

    std::vector<FeatureVector> features(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& p = obs.points[i];
        const auto& seg = segment_at(p.x, corridor);

        // Nearest temporal neighbor (ties by distance in x, then index).
        double slope_sign = 0.0;
        std::size_t best = n;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            if (best == n) {
                best = j;
                continue;
            }
            const double dt_j = std::abs(obs.points[j].t - p.t);
            const double dt_b = std::abs(obs.points[best].t - p.t);
            if (dt_j < dt_b ||
                (dt_j == dt_b && std::abs(obs.points[j].x - p.x) <
                                     std::abs(obs.points[best].x - p.x)))
                best = j;
        }
        if (best < n) {
            const double dt = obs.points[best].t - p.t;
            const double drho = obs.points[best].rho - p.rho;
            if (dt != 0.0 && drho != 0.0) slope_sign = (drho * dt > 0.0) ? 1.0 : -1.0;
        }

        features[i] = {(p.x - seg.x_start) / seg.length(),
                       p.t / corridor.horizon,
                       p.rho,
                       mean_rho,
                       max_rho,
                       slope_sign};
    }
    return features;
}

namespace {

struct ClassifierBatch {
    Mat inputs; // n x d, standardized
    std::vector<int> labels;
};

Mat classifier_forward_logits(const ClassifierModel& model, const Mat& inputs,
                              std::vector<Mat>* activations) {
    const auto& dims = model.layer_dims;
    Mat a = inputs;
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const int in = dims[l];
        const int out = dims[l + 1];
        Eigen::Map<const RowMajorMat> w(model.params.data() + off, out, in);
        Eigen::Map<const Eigen::VectorXd> b(
            model.params.data() + off + static_cast<std::size_t>(out) * in, out);
        off += static_cast<std::size_t>(out) * in + out;
        Mat z = a * w.transpose();
        z.rowwise() += b.transpose();
        if (l + 2 < dims.size()) {
            a = z.array().tanh().matrix();
            if (activations) activations->push_back(a);
        } else {
            a = z;
        }
    }
    return a;
}

Mat softmax_rows(const Mat& logits) {
    Mat p = logits;
    for (Eigen::Index r = 0; r < p.rows(); ++r) {
        const double m = p.row(r).maxCoeff();
        p.row(r) = (p.row(r).array() - m).exp();
        p.row(r) /= p.row(r).sum();
    }
    return p;
}

double cross_entropy_with_gradient(const ClassifierModel& model, const ClassifierBatch& batch,
                                   ParamVector& grad) {
    std::vector<Mat> activations;
    const Mat logits = classifier_forward_logits(model, batch.inputs, &activations);
    const Mat probs = softmax_rows(logits);
    const auto n = static_cast<double>(batch.inputs.rows());

    double loss = 0.0;
    Mat delta = probs;
    for (Eigen::Index r = 0; r < probs.rows(); ++r) {
        const int y = batch.labels[static_cast<std::size_t>(r)];
        loss -= std::log(std::max(probs(r, y), 1e-300));
        delta(r, y) -= 1.0;
    }
    loss /= n;
    delta /= n;

    grad.assign(model.params.size(), 0.0);
    const auto& dims = model.layer_dims;
    for (std::size_t l = dims.size() - 1; l-- > 0;) {
        const int in = dims[l];
        const int out = dims[l + 1];
        std::size_t off = 0;
        for (std::size_t m = 0; m < l; ++m)
            off += static_cast<std::size_t>(dims[m + 1]) * dims[m] + dims[m + 1];
        const Mat& a_prev = l == 0 ? batch.inputs : activations[l - 1];
        Eigen::Map<RowMajorMat> gw(grad.data() + off, out, in);
        Eigen::Map<Eigen::VectorXd> gb(grad.data() + off + static_cast<std::size_t>(out) * in,
                                       out);
        gw = delta.transpose() * a_prev;
        gb = delta.colwise().sum();
        if (l == 0) break;
        Eigen::Map<const RowMajorMat> w(model.params.data() + off, out, in);
        Mat a_bar = delta * w;
        delta = (a_bar.array() * (1.0 - activations[l - 1].array().square())).matrix();
    }
    return loss;
}

Mat standardized_inputs(const ClassifierModel& model,
                        const std::vector<FeatureVector>& features) {
    const auto d = static_cast<Eigen::Index>(model.feature_mean.size());
    Mat inputs(static_cast<Eigen::Index>(features.size()), d);
    for (std::size_t i = 0; i < features.size(); ++i)
        for (Eigen::Index j = 0; j < d; ++j)
            inputs(static_cast<Eigen::Index>(i), j) =
                (features[i][static_cast<std::size_t>(j)] -
                 model.feature_mean[static_cast<std::size_t>(j)]) /
                model.feature_std[static_cast<std::size_t>(j)];
    return inputs;
}

} // namespace

ClassifierTrainResult train_classifier(const std::vector<LabeledFeatureSet>& labeled,
                                       const std::vector<CharacteristicClass>& classes,
                                       const ClassifierConfig& config, std::uint64_t seed) {
    if (classes.size() < 2)
        throw std::invalid_argument("classifier training requires at least two classes");
    for (const auto& set : labeled) {
        if (set.features.empty())
            throw std::invalid_argument("labeled feature set is empty");
        if (set.class_id < 0 || set.class_id >= static_cast<int>(classes.size()))
            throw std::invalid_argument("labeled class id outside class list");
    }
    {
        std::vector<int> distinct;
        for (const auto& set : labeled)
            if (std::find(distinct.begin(), distinct.end(), set.class_id) == distinct.end())
                distinct.push_back(set.class_id);
        if (distinct.size() < 2)
            throw std::invalid_argument("classifier training requires labeled points from at "
                                        "least two distinct classes");
    }

    const std::size_t feature_dim = std::tuple_size<FeatureVector>::value;

    // Stratified holdout per labeled set.
    std::vector<FeatureVector> train_f, hold_f;
    std::vector<int> train_y, hold_y;
    for (std::size_t s = 0; s < labeled.size(); ++s) {
        const auto& set = labeled[s];
        Rng rng(mix_seed(seed, 0x401d + s));
        const auto perm =
            rng.sample_without_replacement(set.features.size(), set.features.size());
        const auto n_hold = static_cast<std::size_t>(
            std::llround(config.holdout_fraction * static_cast<double>(set.features.size())));
        for (std::size_t i = 0; i < perm.size(); ++i) {
            if (i < n_hold) {
                hold_f.push_back(set.features[perm[i]]);
                hold_y.push_back(set.class_id);
            } else {
                train_f.push_back(set.features[perm[i]]);
                train_y.push_back(set.class_id);
            }
        }
    }
    if (train_f.empty()) throw std::invalid_argument("holdout fraction leaves no training data");

    ClassifierTrainResult result;
    ClassifierModel& model = result.model;
    model.classes = classes;
    model.layer_dims.push_back(static_cast<int>(feature_dim));
    for (int h : config.hidden_layers) model.layer_dims.push_back(h);
    model.layer_dims.push_back(static_cast<int>(classes.size()));

    model.feature_mean.assign(feature_dim, 0.0);
    model.feature_std.assign(feature_dim, 0.0);
    for (const auto& f : train_f)
        for (std::size_t j = 0; j < feature_dim; ++j) model.feature_mean[j] += f[j];
    for (double& m : model.feature_mean) m /= static_cast<double>(train_f.size());
    for (const auto& f : train_f)
        for (std::size_t j = 0; j < feature_dim; ++j) {
            const double d = f[j] - model.feature_mean[j];
            model.feature_std[j] += d * d;
        }
    for (double& s : model.feature_std)
        s = std::max(std::sqrt(s / static_cast<double>(train_f.size())), 1e-12);

    // Glorot-uniform init, biases zero.
    std::size_t n_params = 0;
    for (std::size_t l = 0; l + 1 < model.layer_dims.size(); ++l)
        n_params += static_cast<std::size_t>(model.layer_dims[l + 1]) * model.layer_dims[l] +
                    model.layer_dims[l + 1];
    model.params.assign(n_params, 0.0);
    {
        Rng rng(mix_seed(seed, 0x1417));
        std::size_t off = 0;
        for (std::size_t l = 0; l + 1 < model.layer_dims.size(); ++l) {
            const int in = model.layer_dims[l];
            const int out = model.layer_dims[l + 1];
            const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
            for (int i = 0; i < out * in; ++i) model.params[off + i] = rng.uniform(-bound, bound);
            off += static_cast<std::size_t>(out) * in + out;
        }
    }

    ClassifierBatch batch;
    batch.labels = train_y;
    batch.inputs = standardized_inputs(model, train_f);

    AdamOptimizer adam(model.params.size(), config.learning_rate);
    ParamVector grad;
    for (long it = 0; it < config.iterations; ++it) {
        const double loss = cross_entropy_with_gradient(model, batch, grad);
        if (!std::isfinite(loss))
            throw TrainingDiverged(it, "classifier loss became non-finite at iteration " +
                                           std::to_string(it));
        adam.step(model.params, grad);
    }

    const auto accuracy = [&](const std::vector<FeatureVector>& fs, const std::vector<int>& ys) {
        if (fs.empty()) return 1.0;
        std::size_t hits = 0;
        for (std::size_t i = 0; i < fs.size(); ++i)
            if (classify_point(model, fs[i]) == ys[i]) ++hits;
        return static_cast<double>(hits) / static_cast<double>(fs.size());
    };
    result.holdout_accuracy = hold_f.empty() ? accuracy(train_f, train_y)
                                             : accuracy(hold_f, hold_y);
    return result;
}

std::vector<double> classifier_probabilities(const ClassifierModel& model,
                                             const FeatureVector& features) {
    const Mat inputs = standardized_inputs(model, {features});
    const Mat probs = softmax_rows(classifier_forward_logits(model, inputs, nullptr));
    std::vector<double> out(static_cast<std::size_t>(probs.cols()));
    for (Eigen::Index j = 0; j < probs.cols(); ++j) out[static_cast<std::size_t>(j)] = probs(0, j);
    return out;
}

int classify_point(const ClassifierModel& model, const FeatureVector& features) {
    const auto probs = classifier_probabilities(model, features);
    return static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

int classify_segment(const ClassifierModel& model, const ObservationSet& obs,
                     const CorridorSpec& corridor) {
    const auto features = build_classifier_features(obs, corridor);
    std::vector<std::size_t> votes(model.classes.size(), 0);
    for (const auto& f : features) ++votes[static_cast<std::size_t>(classify_point(model, f))];
    std::size_t best = 0;
    for (std::size_t c = 1; c < votes.size(); ++c)
        if (votes[c] > votes[best]) best = c; // ties keep the lowest class id
    return static_cast<int>(best);
}

// ---------------------------------------------------------------------------
// Student
// ---------------------------------------------------------------------------

StudentModel assemble_student(const ClassifierModel& classifier,
                              const std::map<int, TeacherEnsemble>& ensembles,
                              const std::vector<ObservationSet>& per_segment_observations,
                              const CorridorSpec& corridor) {
    if (per_segment_observations.size() != corridor.segments.size())
        throw std::invalid_argument("need one observation set per segment");
    StudentModel student;
    student.classifier = classifier;
    student.ensembles = ensembles;
    student.corridor = corridor;
    student.segment_class.reserve(corridor.segments.size());
    for (std::size_t i = 0; i < corridor.segments.size(); ++i) {
        const int cls = classify_segment(classifier, per_segment_observations[i], corridor);
        if (!student.ensembles.count(cls)) {
            std::ostringstream msg;
            msg << "segment " << (i + 1) << " classified to class " << cls
                << " which has no ensemble";
            throw std::runtime_error(msg.str());
        }
        student.segment_class.push_back(cls);
    }
    return student;
}

double student_predict(const StudentModel& student, double x, double t) {
    const std::size_t seg = segment_index_at(x, student.corridor);
    return ensemble_predict(student.ensembles.at(student.segment_class[seg]), x, t);
}

DensityField student_field(const StudentModel& student, const DensityField& grid_like) {
    DensityField out = grid_like;
    for (std::size_t s = 0; s < student.corridor.segments.size(); ++s) {
        const DensityField slice = extract_segment(grid_like, student.corridor, s);
        const DensityField est =
            ensemble_field(student.ensembles.at(student.segment_class[s]), student.corridor,
                           slice);
        // Columns of the slice within the full grid.
        const auto col0 = static_cast<std::size_t>(
            std::llround((slice.x0 - grid_like.x0) / grid_like.dx));
        for (std::size_t k = 0; k < out.nt; ++k)
            for (std::size_t i = 0; i < slice.nx; ++i)
                out.at(k, col0 + i) = est.at(k, i);
    }
    return out;
}

double student_loss(const StudentModel& student, const ObservationSet& observations) {
    if (observations.points.empty())
        throw std::invalid_argument("student loss over an empty observation set");
    double num = 0.0;
    double den = 0.0;
    for (const auto& p : observations.points) {
        const double est = student_predict(student, p.x, p.t);
        num += (est - p.rho) * (est - p.rho);
        den += p.rho * p.rho;
    }
    if (den == 0.0) throw std::domain_error("student loss undefined for all-zero observations");
    return std::sqrt(num) / std::sqrt(den);
}

// ---------------------------------------------------------------------------
// Checkpointing
// ---------------------------------------------------------------------------

namespace {

nlohmann::json input_map_json(const InputMap& m) {
    return {{"x_min", m.x_min}, {"x_max", m.x_max}, {"t_min", m.t_min}, {"t_max", m.t_max}};
}

InputMap input_map_from_json(const nlohmann::json& j) {
    return {j.at("x_min"), j.at("x_max"), j.at("t_min"), j.at("t_max")};
}

} // namespace

void save_student(const StudentModel& student, const std::string& directory) {
    namespace fs = std::filesystem;
    fs::create_directories(directory);

    nlohmann::json manifest;
    manifest["segment_class"] = student.segment_class;

    nlohmann::json classes = nlohmann::json::array();
    for (const auto& c : student.classifier.classes)
        classes.push_back({{"class_id", c.class_id}, {"v_f", c.v_f}, {"rho_m", c.rho_m}});
    manifest["classes"] = classes;

    nlohmann::json corridor;
    corridor["horizon"] = student.corridor.horizon;
    corridor["length"] = student.corridor.length;
    nlohmann::json segs = nlohmann::json::array();
    for (const auto& s : student.corridor.segments)
        segs.push_back({{"index", s.index},
                        {"x_start", s.x_start},
                        {"x_end", s.x_end},
                        {"v_f", s.v_f},
                        {"rho_m", s.rho_m},
                        {"f_up", s.f_up},
                        {"f_down", s.f_down}});
    corridor["segments"] = segs;
    manifest["corridor"] = corridor;

    manifest["classifier"] = {{"layer_dims", student.classifier.layer_dims},
                              {"params", student.classifier.params},
                              {"feature_mean", student.classifier.feature_mean},
                              {"feature_std", student.classifier.feature_std}};

    nlohmann::json ensembles = nlohmann::json::array();
    for (const auto& [class_id, ensemble] : student.ensembles) {
        nlohmann::json e;
        e["class_id"] = class_id;
        e["segment_index"] = ensemble.segment_index;
        e["normalization"] = input_map_json(ensemble.normalization);
        e["weights"] = ensemble.weights;
        nlohmann::json members = nlohmann::json::array();
        for (std::size_t k = 0; k < ensemble.members.size(); ++k) {
            const auto& m = ensemble.members[k];
            std::ostringstream name;
            name << "teacher_c" << class_id << "_m" << k << ".csv";
            save_checkpoint((fs::path(directory) / name.str()).string(), m.spec, m.params);
            members.push_back({{"file", name.str()},
                               {"validation_loss", m.validation_loss},
                               {"init_seed", m.init_seed}});
        }
        e["members"] = members;
        ensembles.push_back(e);
    }
    manifest["ensembles"] = ensembles;

    std::ofstream out(fs::path(directory) / "manifest.json", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write student manifest in " + directory);
    out << manifest.dump(2) << '\n';
}

StudentModel load_student(const std::string& directory) {
    namespace fs = std::filesystem;
    std::ifstream in(fs::path(directory) / "manifest.json", std::ios::binary);
    if (!in) throw std::runtime_error("cannot open student manifest in " + directory);
    nlohmann::json manifest;
    in >> manifest;

    StudentModel student;
    student.segment_class = manifest.at("segment_class").get<std::vector<int>>();

    for (const auto& c : manifest.at("classes"))
        student.classifier.classes.push_back(
            {c.at("class_id"), c.at("v_f"), c.at("rho_m")});

    const auto& corridor = manifest.at("corridor");
    student.corridor.horizon = corridor.at("horizon");
    student.corridor.length = corridor.at("length");
    for (const auto& s : corridor.at("segments")) {
        SegmentSpec seg;
        seg.index = s.at("index");
        seg.x_start = s.at("x_start");
        seg.x_end = s.at("x_end");
        seg.v_f = s.at("v_f");
        seg.rho_m = s.at("rho_m");
        seg.f_up = s.at("f_up");
        seg.f_down = s.at("f_down");
        student.corridor.segments.push_back(seg);
    }
    student.corridor.validate();

    const auto& cls = manifest.at("classifier");
    student.classifier.layer_dims = cls.at("layer_dims").get<std::vector<int>>();
    student.classifier.params = cls.at("params").get<std::vector<double>>();
    student.classifier.feature_mean = cls.at("feature_mean").get<std::vector<double>>();
    student.classifier.feature_std = cls.at("feature_std").get<std::vector<double>>();

    for (const auto& e : manifest.at("ensembles")) {
        TeacherEnsemble ensemble;
        ensemble.segment_index = e.at("segment_index");
        ensemble.normalization = input_map_from_json(e.at("normalization"));
        ensemble.weights = e.at("weights").get<std::vector<double>>();
        for (const auto& m : e.at("members")) {
            TeacherMember member;
            auto [spec, params] =
                load_checkpoint((fs::path(directory) / m.at("file").get<std::string>()).string());
            member.spec = std::move(spec);
            member.params = std::move(params);
            member.validation_loss = m.at("validation_loss");
            member.init_seed = m.at("init_seed");
            ensemble.members.push_back(std::move(member));
        }
        student.ensembles.emplace(e.at("class_id").get<int>(), std::move(ensemble));
    }
    return student;
}

} // namespace tse
