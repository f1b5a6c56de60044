#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tse/corridor.hpp"
#include "tse/density_field.hpp"
#include "tse/network.hpp"
#include "tse/pidl.hpp"

namespace tse {

struct BaselineResult {
    std::string name;
    DensityField field;
    double relative_l2 = 0.0;
    std::vector<TrainReport> reports;
};

/// One single PIDL teacher per segment (no ensemble averaging), trained on
/// the same shared observation splits as the ensemble pipeline; segment
/// fields are concatenated into a corridor field and scored against truth.
BaselineResult train_non_ensemble_pidl(const DensityField& truth, const CorridorSpec& corridor,
                                       const PidlConfig& base_config, const NetworkSpec& spec,
                                       std::uint64_t seed);

/// Physics-uninformed reference: identical architecture and optimizer, mu
/// forced to 0, one network over the whole corridor trained on the pooled
/// per-segment observations. per_segment==true trains one such network per
/// segment instead (config flag for the open question on the paper's setup).
BaselineResult train_plain_dl(const DensityField& truth, const CorridorSpec& corridor,
                              const PidlConfig& base_config, const NetworkSpec& spec,
                              std::uint64_t seed, bool per_segment = false);

/// Deterministic training-free floor: nearest-neighbor interpolation of the
/// pooled observations onto the evaluation grid, distances normalized by
/// corridor length and horizon.
BaselineResult interp_baseline(const ObservationSet& observations, const DensityField& truth,
                               const CorridorSpec& corridor);

} // namespace tse
