#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mff/objective.hpp"

namespace mff {

struct TrainConfig {
    long epochs = 1;
    double lr = 1.0;
    /// Snapshot every `snapshot_stride` epochs; nullopt selects the default
    /// logarithmic grid {1,2,4,...} plus every 1000th epoch.
    std::optional<long> snapshot_stride;
    ObjectiveConfig objective;
    CInitScheme init = CInitScheme::gaussian();
    std::size_t width = 1;
    std::uint64_t seed = 0;
    Activation activation = Activation::relu;
    ParamMode mode = ParamMode::sphere;
    /// When false (default) the wall_time column is written as 0 so that
    /// outputs are byte-stable; real timings go to the run log instead.
    bool record_wall_time = false;

    void validate() const;
};

struct TrajectoryRecord {
    long epoch = 0;
    double total = 0.0;
    double fit = 0.0;
    double reg = 0.0;
    double tv_norm = 0.0;
    double two_norm = 0.0;
    double population_fit = 0.0;  // NaN when not computed at this epoch
    double wall_time = 0.0;
};

struct TrainResult {
    Ensemble final_ensemble;
    std::vector<TrajectoryRecord> records;
    std::vector<long> snapshot_epochs;
    std::vector<Ensemble> snapshots;
};

/// theta_i <- theta_i - lr * grad_i; sphere mode renormalizes z. Throws with
/// epoch context on non-finite updates (epoch = -1 when standalone).
Ensemble apply_gd_step(const Ensemble& e, const std::vector<NeuronGrad>& grads, double lr,
                       long epoch_context = -1);

Ensemble gd_step(const Ensemble& e, const Dataset& data, const ObjectiveConfig& cfg, double lr);
Ensemble gd_step(const Ensemble& e, const Target& target, const ObjectiveConfig& cfg, double lr);

/// Epochs at which snapshots are taken (always includes 0 and `epochs`).
std::vector<long> snapshot_epochs(long epochs, std::optional<long> stride);

/// Full-batch gradient descent on the empirical loss. `pop_target`, when
/// given for a relu/sphere run, adds closed-form population fit values at
/// snapshot epochs.
TrainResult train(const TrainConfig& cfg, const Dataset& data, const Target* pop_target = nullptr);

/// Gradient descent on the exact population loss.
TrainResult train(const TrainConfig& cfg, const Target& target);

/// Trajectory CSV: epoch,total,fit,reg,tv_norm,two_norm,population_fit,wall_time.
void write_trajectory_csv_file(const std::string& path, const std::vector<TrajectoryRecord>& records);

}  // namespace mff
