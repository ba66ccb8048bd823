#include "mff/flow.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace mff {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

bool is_snapshot_epoch(long epoch, long total, const std::optional<long>& stride) {
    if (epoch == 0 || epoch == total) return true;
    if (stride) return epoch % *stride == 0;
    if (epoch % 1000 == 0) return true;
    return (epoch & (epoch - 1)) == 0;  // powers of two
}

struct StepSource {
    const Dataset* data = nullptr;
    const Target* target = nullptr;

    LossGrad loss_grad(const Ensemble& e, const ObjectiveConfig& cfg) const {
        return data ? empirical_loss_grad(e, *data, cfg) : population_loss_grad(e, *target, cfg);
    }
};

TrainResult run_training(const TrainConfig& cfg, const StepSource& src,
                         const Target* pop_target) {
    cfg.validate();
    Rng rng(cfg.seed);
    Ensemble current =
        init_ensemble(cfg.width, cfg.objective.d, cfg.init, rng, cfg.activation, cfg.mode);

    const bool pop_fit_each_epoch = src.target != nullptr;
    const bool pop_fit_at_snapshots =
        pop_target != nullptr && cfg.activation == Activation::relu && cfg.mode == ParamMode::sphere;

    TrainResult result{current, {}, snapshot_epochs(cfg.epochs, cfg.snapshot_stride), {}};
    result.records.reserve(static_cast<std::size_t>(cfg.epochs) + 1);
    result.snapshots.reserve(result.snapshot_epochs.size());

    const auto t0 = Clock::now();
    auto emit = [&](long epoch, const LossBreakdown& loss) {
        TrajectoryRecord rec;
        rec.epoch = epoch;
        rec.total = loss.total;
        rec.fit = loss.fit;
        rec.reg = loss.reg;
        rec.tv_norm = q_norm(current, 1.0);
        rec.two_norm = std::sqrt(q_norm(current, 2.0));
        rec.population_fit = kNan;
        if (pop_fit_each_epoch) {
            rec.population_fit = loss.fit;
        } else if (pop_fit_at_snapshots && is_snapshot_epoch(epoch, cfg.epochs, cfg.snapshot_stride)) {
            rec.population_fit =
                cfg.objective.scale() * 0.5 * population_l2_error(current, *pop_target);
        }
        rec.wall_time = cfg.record_wall_time ? seconds_since(t0) : 0.0;
        result.records.push_back(rec);
        if (is_snapshot_epoch(epoch, cfg.epochs, cfg.snapshot_stride))
            result.snapshots.push_back(current);
    };

    for (long epoch = 0; epoch < cfg.epochs; ++epoch) {
        LossGrad lg;
        try {
            lg = src.loss_grad(current, cfg.objective);
        } catch (const std::runtime_error& err) {
            throw std::runtime_error("train: epoch " + std::to_string(epoch) + ": " + err.what());
        }
        emit(epoch, lg.loss);
        current = apply_gd_step(current, lg.grads, cfg.lr, epoch);
    }
    // terminal record (losses after the last step)
    const LossGrad last = src.loss_grad(current, cfg.objective);
    emit(cfg.epochs, last.loss);

    result.final_ensemble = current;
    return result;
}

}  // namespace

void TrainConfig::validate() const {
    if (epochs < 1) throw std::invalid_argument("TrainConfig: need epochs >= 1");
    if (!(lr > 0.0)) throw std::invalid_argument("TrainConfig: need lr > 0");
    if (snapshot_stride && *snapshot_stride < 1)
        throw std::invalid_argument("TrainConfig: need snapshot_stride >= 1");
    if (width == 0) throw std::invalid_argument("TrainConfig: need width >= 1");
    if (objective.lambda < 0.0) throw std::invalid_argument("TrainConfig: need lambda >= 0");
}

Ensemble apply_gd_step(const Ensemble& e, const std::vector<NeuronGrad>& grads, double lr,
                       long epoch_context) {
    if (!(lr > 0.0)) throw std::invalid_argument("apply_gd_step: need lr > 0");
    if (grads.size() != e.width())
        throw std::invalid_argument("apply_gd_step: gradient count mismatch");
    std::vector<Neuron> next(e.width());
    for (std::size_t i = 0; i < e.width(); ++i) {
        const Neuron& n = e.neuron(i);
        Neuron out;
        out.c = n.c - lr * grads[i].dc;
        out.z.resize(n.z.size());
        double sq = 0.0;
        for (std::size_t k = 0; k < n.z.size(); ++k) {
            out.z[k] = n.z[k] - lr * grads[i].dz[k];
            sq += out.z[k] * out.z[k];
        }
        if (!std::isfinite(out.c) || !std::isfinite(sq))
            throw std::runtime_error("apply_gd_step: non-finite update for neuron " +
                                     std::to_string(i) +
                                     (epoch_context >= 0
                                          ? " at epoch " + std::to_string(epoch_context)
                                          : std::string()));
        if (e.mode() == ParamMode::sphere) {
            const double inv = 1.0 / std::sqrt(sq);
            for (double& v : out.z) v *= inv;
        }
        next[i] = std::move(out);
    }
    return Ensemble(std::move(next), e.d(), e.activation(), e.mode());
}

Ensemble gd_step(const Ensemble& e, const Dataset& data, const ObjectiveConfig& cfg, double lr) {
    return apply_gd_step(e, empirical_gradient(e, data, cfg), lr);
}

Ensemble gd_step(const Ensemble& e, const Target& target, const ObjectiveConfig& cfg, double lr) {
    return apply_gd_step(e, population_gradient(e, target, cfg), lr);
}

std::vector<long> snapshot_epochs(long epochs, std::optional<long> stride) {
    std::vector<long> out;
    for (long epoch = 0; epoch <= epochs; ++epoch)
        if (is_snapshot_epoch(epoch, epochs, stride)) out.push_back(epoch);
    return out;
}

TrainResult train(const TrainConfig& cfg, const Dataset& data, const Target* pop_target) {
    if (cfg.objective.loss_kind != LossKind::empirical)
        throw std::invalid_argument("train: dataset overload requires empirical loss kind");
    StepSource src;
    src.data = &data;
    return run_training(cfg, src, pop_target);
}

TrainResult train(const TrainConfig& cfg, const Target& target) {
    if (cfg.objective.loss_kind != LossKind::population)
        throw std::invalid_argument("train: target overload requires population loss kind");
    StepSource src;
    src.target = &target;
    return run_training(cfg, src, nullptr);
}

void write_trajectory_csv_file(const std::string& path,
                               const std::vector<TrajectoryRecord>& records) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_trajectory_csv_file: cannot open " + path);
    os << "epoch,total,fit,reg,tv_norm,two_norm,population_fit,wall_time\n";
    char buf[256];
    for (const TrajectoryRecord& r : records) {
        std::snprintf(buf, sizeof buf, "%ld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.6f\n", r.epoch,
                      r.total, r.fit, r.reg, r.tv_norm, r.two_norm, r.population_fit, r.wall_time);
        os << buf;
    }
}

}  // namespace mff
