#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tse/corridor.hpp"
#include "tse/density_field.hpp"
#include "tse/network.hpp"
#include "tse/pidl.hpp"

namespace tse {

/// One distinct local traffic characteristic (v_f, rho_m pair).
struct CharacteristicClass {
    int class_id = 0;
    double v_f = 0.0;
    double rho_m = 0.0;
};

/// Distinct (v_f, rho_m) pairs of the corridor in first-occurrence order,
/// ids 0..C-1.
std::vector<CharacteristicClass> corridor_classes(const CorridorSpec& corridor);

/// Class id of a segment's true characteristics.
int true_class_of_segment(const CorridorSpec& corridor, std::size_t segment_index,
                          const std::vector<CharacteristicClass>& classes);

struct TeacherMember {
    ParamVector params;
    NetworkSpec spec;
    double validation_loss = 0.0;
    std::uint64_t init_seed = 0;
};

/// Per-segment set of teacher networks with inverse-validation-loss weights.
struct TeacherEnsemble {
    int segment_index = 0;
    InputMap normalization;
    std::vector<TeacherMember> members;
    std::vector<double> weights;
};

/// Inverse-loss weighting, normalized to sum 1; losses floored at 1e-12.
std::vector<double> ensemble_weights(const std::vector<double>& validation_losses);

/// Trains K teachers with init seeds seed..seed+K-1 on a shared observation
/// set (80/20 train/validation split drawn once from `seed`). A diverging
/// member is retried once with a fresh seed. base_config supplies the
/// hyperparameters; its seed field is ignored in favor of `seed`.
TeacherEnsemble train_teacher_ensemble(const DensityField& truth, const CorridorSpec& corridor,
                                       std::size_t segment_index, int member_count,
                                       const PidlConfig& base_config, const NetworkSpec& spec,
                                       std::uint64_t seed);

/// Weighted average of member predictions at one physical point. Members are
/// summed in init-seed order so permutations cannot change the result.
double ensemble_predict(const TeacherEnsemble& ensemble, double x, double t);

/// Weighted member evaluation over a grid slice.
DensityField ensemble_field(const TeacherEnsemble& ensemble, const CorridorSpec& corridor,
                            const DensityField& grid_like);

// --- Characteristics classifier -------------------------------------------

using FeatureVector = std::array<double, 6>;

/// Per-point features from one segment's observations: position within the
/// segment, normalized time, the density value, the set's mean and max
/// density, and the sign of the empirical d(rho)/dt toward the nearest
/// temporal neighbor.
std::vector<FeatureVector> build_classifier_features(const ObservationSet& obs,
                                                     const CorridorSpec& corridor);

struct LabeledFeatureSet {
    std::vector<FeatureVector> features;
    int class_id = 0;
};

struct ClassifierConfig {
    std::vector<int> hidden_layers{16, 16};
    double learning_rate = 1e-3;
    long iterations = 3000;
    double holdout_fraction = 0.2;
};

/// Softmax MLP over standardized features.
struct ClassifierModel {
    std::vector<int> layer_dims; ///< feature dim, hidden..., class count
    ParamVector params;
    std::vector<double> feature_mean;
    std::vector<double> feature_std;
    std::vector<CharacteristicClass> classes;
};

struct ClassifierTrainResult {
    ClassifierModel model;
    double holdout_accuracy = 0.0;
};

/// Cross-entropy training on the pooled labeled sets, with a stratified
/// holdout for the reported accuracy. Requires at least two distinct classes.
ClassifierTrainResult train_classifier(const std::vector<LabeledFeatureSet>& labeled,
                                       const std::vector<CharacteristicClass>& classes,
                                       const ClassifierConfig& config, std::uint64_t seed);

/// Class probabilities for one feature vector; sums to 1.
std::vector<double> classifier_probabilities(const ClassifierModel& model,
                                             const FeatureVector& features);

/// Argmax class of one feature vector.
int classify_point(const ClassifierModel& model, const FeatureVector& features);

/// Majority vote over per-point classifications; ties break to the lowest
/// class id.
int classify_segment(const ClassifierModel& model, const ObservationSet& obs,
                     const CorridorSpec& corridor);

// --- Student ----------------------------------------------------------------

/// Corridor-wide estimator: classify each segment once at assembly, then
/// route queries by position to the matching teacher ensemble.
struct StudentModel {
    ClassifierModel classifier;
    std::map<int, TeacherEnsemble> ensembles; ///< keyed by class id
    std::vector<int> segment_class;           ///< resolved routing, one per segment
    CorridorSpec corridor;
};

/// Resolves each segment's class from its observations and builds the
/// routing table. Throws when a segment classifies to a class with no
/// ensemble.
StudentModel assemble_student(const ClassifierModel& classifier,
                              const std::map<int, TeacherEnsemble>& ensembles,
                              const std::vector<ObservationSet>& per_segment_observations,
                              const CorridorSpec& corridor);

double student_predict(const StudentModel& student, double x, double t);

/// Full-grid student evaluation (segment-wise routed ensemble fields).
DensityField student_field(const StudentModel& student, const DensityField& grid_like);

/// Relative L2 error of the student restricted to the observation points
/// (the points carry their ground-truth densities).
double student_loss(const StudentModel& student, const ObservationSet& observations);

/// Checkpoint directory: one CSV per teacher member plus manifest.json with
/// classes, weights, routing, and the classifier.
void save_student(const StudentModel& student, const std::string& directory);
StudentModel load_student(const std::string& directory);

} // namespace tse
