#include "mff/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <numbers>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "mff/parallel.hpp"

namespace mff {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kRunTag = 0x52554e5354524d21ULL;
constexpr std::uint64_t kTeacherTag = 0x5445414348455221ULL;
constexpr std::uint64_t kDatasetTag = 0x44415441534554aaULL;

std::string fmt17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

const char* kind_name(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::student_teacher_pop: return "student_teacher_pop";
        case ExperimentKind::student_teacher_erm: return "student_teacher_erm";
        case ExperimentKind::nonplanted_pop: return "nonplanted_pop";
        case ExperimentKind::clt_verify: return "clt_verify";
        case ExperimentKind::bound_report: return "bound_report";
        case ExperimentKind::kernel_selftest: return "kernel_selftest";
    }
    return "?";
}

ExperimentKind kind_from_name(const std::string& s) {
    if (s == "student_teacher_pop") return ExperimentKind::student_teacher_pop;
    if (s == "student_teacher_erm") return ExperimentKind::student_teacher_erm;
    if (s == "nonplanted_pop") return ExperimentKind::nonplanted_pop;
    if (s == "clt_verify") return ExperimentKind::clt_verify;
    if (s == "bound_report") return ExperimentKind::bound_report;
    if (s == "kernel_selftest") return ExperimentKind::kernel_selftest;
    throw ConfigError("config key 'kind': unknown experiment kind '" + s + "'");
}

template <class T>
T require_field(const json& j, const std::string& key) {
    if (!j.contains(key)) throw ConfigError("config key '" + key + "': missing");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("config key '" + key + "': " + e.what());
    }
}

template <class T>
T optional_field(const json& j, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("config key '" + key + "': " + e.what());
    }
}

CInitScheme parse_init(const json& j) {
    if (!j.contains("init")) return CInitScheme::gaussian();
    const json& v = j.at("init");
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        if (s == "gaussian") return CInitScheme::gaussian();
        if (s == "zero") return CInitScheme::zero();
        throw ConfigError("config key 'init': expected 'gaussian', 'zero' or {\"constant\": v}, got '" +
                          s + "'");
    }
    if (v.is_object() && v.contains("constant"))
        return CInitScheme::constant(v.at("constant").get<double>());
    throw ConfigError("config key 'init': expected 'gaussian', 'zero' or {\"constant\": v}");
}

json init_to_json(const CInitScheme& init) {
    switch (init.kind) {
        case CInitScheme::Kind::gaussian: return "gaussian";
        case CInitScheme::Kind::zero: return "zero";
        case CInitScheme::Kind::constant: return json{{"constant", init.value}};
    }
    return "gaussian";
}

void validate_config(const ExperimentConfig& cfg) {
    if (cfg.d < 1) throw ConfigError("config key 'd': need d >= 1");
    if (cfg.kind == ExperimentKind::student_teacher_pop ||
        cfg.kind == ExperimentKind::student_teacher_erm ||
        cfg.kind == ExperimentKind::nonplanted_pop) {
        if (cfg.m_list.empty()) throw ConfigError("config key 'm_list': must be non-empty");
        for (std::size_t i = 0; i + 1 < cfg.m_list.size(); ++i)
            if (cfg.m_list[i] >= cfg.m_list[i + 1])
                throw ConfigError("config key 'm_list': must be strictly ascending");
        if (cfg.kappa < 1) throw ConfigError("config key 'kappa': need kappa >= 1");
        if (cfg.epochs < 1) throw ConfigError("config key 'epochs': need epochs >= 1");
        if (!(cfg.lr > 0.0)) throw ConfigError("config key 'lr': need lr > 0");
        if (cfg.lambda < 0.0) throw ConfigError("config key 'lambda': need lambda >= 0");
    }
    if (cfg.kind == ExperimentKind::student_teacher_erm && cfg.n < 1)
        throw ConfigError("config key 'n': need n >= 1");
    if (cfg.kind == ExperimentKind::clt_verify) {
        if (cfg.clt.M < 2) throw ConfigError("config key 'clt.M': need M >= 2");
        if (cfg.clt.m_list.empty()) throw ConfigError("config key 'clt.m_list': must be non-empty");
        if (cfg.clt.trials < 1) throw ConfigError("config key 'clt.trials': need trials >= 1");
        if (cfg.clt.steps < 1) throw ConfigError("config key 'clt.steps': need steps >= 1");
        if (!(cfg.clt.lr > 0.0)) throw ConfigError("config key 'clt.lr': need lr > 0");
        if (cfg.clt.n < 1) throw ConfigError("config key 'clt.n': need n >= 1");
    }
}

json provenance_block(const ExperimentConfig& cfg) {
    json p;
    p["generator"] = "mff";
    p["base_seed"] = cfg.base_seed;
    p["config"] = json::parse(config_to_json(cfg));
    return p;
}

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    os << text;
}

void write_json_file(const fs::path& path, const json& j) { write_text_file(path, j.dump(2) + "\n"); }

// ---------------------------------------------------------------- sweeps ---

struct WidthSummary {
    std::size_t m = 0;
    double final_avg_fit = 0.0;
    double final_avg_total = 0.0;
    double final_avg_tv = 0.0;
    double final_avg_two = 0.0;
};

ObjectiveConfig objective_of(const ExperimentConfig& cfg) {
    ObjectiveConfig obj;
    obj.loss_kind = cfg.kind == ExperimentKind::student_teacher_erm ? LossKind::empirical
                                                                    : LossKind::population;
    obj.lambda = cfg.lambda;
    obj.rescale_by_d = cfg.rescale_by_d;
    obj.d = cfg.d;
    return obj;
}

void write_run_files(const fs::path& run_dir, const TrainResult& result) {
    fs::create_directories(run_dir / "snapshots");
    write_trajectory_csv_file((run_dir / "trajectory.csv").string(), result.records);
    for (std::size_t si = 0; si < result.snapshots.size(); ++si)
        write_ensemble_csv_file(
            (run_dir / "snapshots" / ("epoch_" + std::to_string(result.snapshot_epochs[si]) + ".csv"))
                .string(),
            result.snapshots[si]);
}

WidthSummary aggregate_width(const ExperimentConfig& cfg, const fs::path& out_root, std::size_t m,
                             const std::vector<TrainResult>& runs, const Target& target,
                             const Dataset* data) {
    const fs::path width_dir = out_root / ("width_" + std::to_string(m));
    fs::create_directories(width_dir);
    const std::vector<long>& epochs = runs.front().snapshot_epochs;
    const std::size_t n_records = runs.front().records.size();
    const double kappa = static_cast<double>(runs.size());

    // per-epoch averages across runs
    {
        std::ofstream os(width_dir / "avg.csv");
        os << "epoch,avg_total,avg_fit,avg_reg,avg_tv,avg_two,avg_pop_fit\n";
        for (std::size_t rix = 0; rix < n_records; ++rix) {
            double tot = 0, fit = 0, reg = 0, tv = 0, two = 0, pop = 0;
            bool pop_ok = true;
            for (const TrainResult& r : runs) {
                const TrajectoryRecord& rec = r.records[rix];
                tot += rec.total;
                fit += rec.fit;
                reg += rec.reg;
                tv += rec.tv_norm;
                two += rec.two_norm;
                if (std::isnan(rec.population_fit)) pop_ok = false;
                else pop += rec.population_fit;
            }
            os << runs.front().records[rix].epoch << "," << fmt17(tot / kappa) << ","
               << fmt17(fit / kappa) << "," << fmt17(reg / kappa) << "," << fmt17(tv / kappa) << ","
               << fmt17(two / kappa) << ","
               << (pop_ok ? fmt17(pop / kappa) : std::string("nan")) << "\n";
        }
    }

    FluctuationReport report;
    report.m = m;
    report.kappa = runs.size();
    report.epochs = epochs;
    const bool pop_norm_ok = runs.front().final_ensemble.activation() == Activation::relu &&
                             runs.front().final_ensemble.mode() == ParamMode::sphere;
    const double bound = pop_norm_ok ? mc_bound(target, NormSpec::population()) : 0.0;
    report.mc_bound_value = bound;
    for (std::size_t si = 0; si < epochs.size(); ++si) {
        std::vector<Ensemble> snaps;
        snaps.reserve(runs.size());
        for (const TrainResult& r : runs) snaps.push_back(r.snapshots[si]);
        if (runs.size() >= 2) {
            if (pop_norm_ok)
                report.fluct_pop.push_back(average_fluctuation(snaps, NormSpec::population()));
            if (data) report.fluct_emp.push_back(average_fluctuation(snaps, NormSpec::empirical(*data)));
        }
        double tv = 0, two = 0;
        for (const TrainResult& r : runs) {
            const TrajectoryRecord& rec = r.records[static_cast<std::size_t>(epochs[si])];
            tv += rec.tv_norm;
            two += rec.two_norm;
        }
        report.avg_tv.push_back(tv / kappa);
        report.avg_two.push_back(two / kappa);
    }

    json j;
    j["m"] = report.m;
    j["kappa"] = report.kappa;
    j["epochs"] = report.epochs;
    j["fluct_emp"] = report.fluct_emp;
    j["fluct_pop"] = report.fluct_pop;
    j["mc_bound"] = report.mc_bound_value;
    j["norms"] = json{{"tv", report.avg_tv}, {"two", report.avg_two}};
    j["scaling"] = "fluct_* entries are unscaled; the plot script multiplies by m";
    j["provenance"] = provenance_block(cfg);
    write_json_file(width_dir / "fluctuation.json", j);

    // scaled companion table for the plot script
    {
        std::ofstream os(width_dir / "fluct.csv");
        os << "epoch,m_fluct_pop,m_fluct_emp\n";
        for (std::size_t si = 0; si < epochs.size(); ++si) {
            os << epochs[si];
            os << ","
               << (si < report.fluct_pop.size() ? fmt17(report.fluct_pop[si] * static_cast<double>(m))
                                                : std::string("nan"));
            os << ","
               << (si < report.fluct_emp.size() ? fmt17(report.fluct_emp[si] * static_cast<double>(m))
                                                : std::string("nan"));
            os << "\n";
        }
    }

    WidthSummary ws;
    ws.m = m;
    double fit = 0, tot = 0, tv = 0, two = 0;
    for (const TrainResult& r : runs) {
        fit += r.records.back().fit;
        tot += r.records.back().total;
        tv += r.records.back().tv_norm;
        two += r.records.back().two_norm;
    }
    ws.final_avg_fit = fit / kappa;
    ws.final_avg_total = tot / kappa;
    ws.final_avg_tv = tv / kappa;
    ws.final_avg_two = two / kappa;
    return ws;
}

void emit_gnuplot(const ExperimentConfig& cfg, const fs::path& out_root, double bound,
                  double teacher_tv, double teacher_two) {
    std::ostringstream gp;
    gp << "# Generated alongside the data files; run `gnuplot plots.gp` here.\n";
    gp << "set terminal pngcairo size 1600,420\nset output 'panels.png'\n";
    gp << "set multiplot layout 1,4\n";
    gp << "set logscale x\nset logscale y\nset key bottom left\n";
    gp << "set title 'average fluctuation (scaled by m)'\n";
    gp << "plot ";
    for (std::size_t i = 0; i < cfg.m_list.size(); ++i)
        gp << "'width_" << cfg.m_list[i] << "/fluct.csv' using ($1+1):2 with lines title 'm="
           << cfg.m_list[i] << "', ";
    gp << fmt17(bound) << " with lines dt 2 lc 'black' title 'MC bound'\n";
    gp << "set title 'average loss'\n";
    gp << "plot ";
    for (std::size_t i = 0; i < cfg.m_list.size(); ++i) {
        gp << "'width_" << cfg.m_list[i] << "/avg.csv' using ($1+1):2 with lines title 'm="
           << cfg.m_list[i] << "'";
        gp << (i + 1 < cfg.m_list.size() ? ", " : "\n");
    }
    gp << "unset logscale y\n";
    gp << "set title 'average TV norm'\n";
    gp << "plot ";
    for (std::size_t i = 0; i < cfg.m_list.size(); ++i)
        gp << "'width_" << cfg.m_list[i] << "/avg.csv' using ($1+1):5 with lines title 'm="
           << cfg.m_list[i] << "', ";
    gp << fmt17(teacher_tv) << " with lines dt 2 lc 'black' title 'target'\n";
    gp << "set title 'average 2-norm'\n";
    gp << "plot ";
    for (std::size_t i = 0; i < cfg.m_list.size(); ++i)
        gp << "'width_" << cfg.m_list[i] << "/avg.csv' using ($1+1):6 with lines title 'm="
           << cfg.m_list[i] << "', ";
    gp << fmt17(teacher_two) << " with lines dt 2 lc 'black' title 'target'\n";
    gp << "unset multiplot\n";
    write_text_file(out_root / "plots.gp", gp.str());
}

int run_sweep(const ExperimentConfig& cfg, std::ostream& log) {
    const fs::path out_root(cfg.out_dir);
    fs::create_directories(out_root);
    write_text_file(out_root / "config.json", config_to_json(cfg) + "\n");

    const Target target = make_target(cfg);
    double teacher_tv = 1.0, teacher_two = 1.0;
    if (target.kind() == Target::Kind::teacher) {
        write_ensemble_csv_file((out_root / "teacher.csv").string(), target.teacher_ensemble());
        teacher_tv = q_norm(target.teacher_ensemble(), 1.0);
        teacher_two = std::sqrt(q_norm(target.teacher_ensemble(), 2.0));
    }

    std::optional<Dataset> data;
    if (cfg.kind == ExperimentKind::student_teacher_erm) {
        Rng rng(dataset_seed(cfg.base_seed));
        data = sample_dataset(target, cfg.n, cfg.d, rng);
        write_dataset_csv_file((out_root / "dataset.csv").string(), *data);
    }

    const ObjectiveConfig obj = objective_of(cfg);
    std::vector<WidthSummary> summaries;
    for (std::size_t wi = 0; wi < cfg.m_list.size(); ++wi) {
        const std::size_t m = cfg.m_list[wi];
        log << "[mff] width m=" << m << ": " << cfg.kappa << " run(s)\n";
        std::vector<std::unique_ptr<TrainResult>> slots(cfg.kappa);

        auto run_one = [&](std::size_t k) {
            TrainConfig tc;
            tc.epochs = cfg.epochs;
            tc.lr = cfg.lr;
            tc.snapshot_stride = cfg.snapshot_stride;
            tc.objective = obj;
            tc.init = cfg.init;
            tc.width = m;
            tc.seed = seed_schedule(cfg.base_seed, wi, k);
            tc.record_wall_time = cfg.record_wall_time;
            TrainResult res = data ? train(tc, *data, &target) : train(tc, target);
            const fs::path run_dir =
                out_root / "runs" / ("m" + std::to_string(m) + "_r" + std::to_string(k));
            write_run_files(run_dir, res);
            slots[k] = std::make_unique<TrainResult>(std::move(res));
        };

        const std::size_t workers =
            std::min<std::size_t>(static_cast<std::size_t>(par::thread_count()), cfg.kappa);
        if (workers <= 1 || cfg.kappa == 1) {
            for (std::size_t k = 0; k < cfg.kappa; ++k) run_one(k);
        } else {
            std::atomic<std::size_t> next{0};
            std::exception_ptr first_error;
            std::mutex error_mutex;
            std::vector<std::thread> pool;
            for (std::size_t w = 0; w < workers; ++w)
                pool.emplace_back([&] {
                    par::NestedScope scope;
                    for (;;) {
                        const std::size_t k = next.fetch_add(1);
                        if (k >= cfg.kappa) break;
                        try {
                            run_one(k);
                        } catch (...) {
                            std::lock_guard<std::mutex> lock(error_mutex);
                            if (!first_error) first_error = std::current_exception();
                        }
                    }
                });
            for (auto& t : pool) t.join();
            if (first_error) std::rethrow_exception(first_error);
        }
        std::vector<TrainResult> results;
        results.reserve(cfg.kappa);
        for (auto& slot : slots) results.push_back(std::move(*slot));
        summaries.push_back(
            aggregate_width(cfg, out_root, m, results, target, data ? &*data : nullptr));
        log << "[mff]   final avg fit " << summaries.back().final_avg_fit << "\n";
    }

    const double bound = mc_bound(target, NormSpec::population());
    emit_gnuplot(cfg, out_root, bound, teacher_tv, teacher_two);

    json summary;
    summary["kind"] = kind_name(cfg.kind);
    summary["mc_bound_population"] = bound;
    if (target.kind() == Target::Kind::great_circle) summary["circle_quad_nodes"] = 512;
    if (target.kind() == Target::Kind::teacher) {
        const Ensemble& t = target.teacher_ensemble();
        if (t.width() >= 2)
            summary["teacher_angle"] = std::acos(std::max(
                -1.0,
                std::min(1.0, UnitVector(t.neuron(0).z).dot(UnitVector(t.neuron(1).z)))));
        summary["teacher_norm_sq"] = population_inner(t, t);
    }
    json widths = json::array();
    for (const WidthSummary& ws : summaries) {
        widths.push_back(json{{"m", ws.m},
                              {"final_avg_fit", ws.final_avg_fit},
                              {"final_avg_total", ws.final_avg_total},
                              {"final_avg_tv", ws.final_avg_tv},
                              {"final_avg_two", ws.final_avg_two}});
    }
    summary["widths"] = widths;
    summary["provenance"] = provenance_block(cfg);
    write_json_file(out_root / "summary.json", summary);
    return 0;
}

// ------------------------------------------------------------- clt verify ---

int run_clt_verify(const ExperimentConfig& cfg, std::ostream& log) {
    const fs::path out_root(cfg.out_dir);
    fs::create_directories(out_root);
    write_text_file(out_root / "config.json", config_to_json(cfg) + "\n");

    const CltConfig& cc = cfg.clt;
    Rng base_rng(mix64(cfg.base_seed, 0x626173654d454153ULL));
    const BaseMeasure base = BaseMeasure::sample(cc.M, cc.d, CInitScheme::gaussian(), base_rng);

    Rng teacher_rng(teacher_seed(cfg.base_seed));
    std::vector<Neuron> teacher_atoms(2);
    for (Neuron& a : teacher_atoms) {
        a.c = 1.0;
        a.z = sample_uniform_sphere(cc.d, teacher_rng).coords();
    }
    const std::vector<double> teacher_w(2, 0.5);

    Rng data_rng(dataset_seed(cfg.base_seed));
    Dataset data;
    for (std::size_t l = 0; l < cc.n; ++l) {
        UnitVector x = sample_uniform_sphere(cc.d, data_rng);
        data.values.push_back(weighted_eval(teacher_atoms, teacher_w, base.activation, x));
        data.points.push_back(std::move(x));
    }

    ObjectiveConfig obj;
    obj.loss_kind = LossKind::empirical;
    obj.lambda = cc.lambda;
    obj.rescale_by_d = false;
    obj.d = cc.d;

    log << "[mff] clt prediction: M=" << cc.M << " trials=" << cc.trials << "\n";
    const CltPrediction pred = clt_prediction_experiment(
        base, data, obj, cc.lr, cc.steps, cc.m_list, cc.trials, mix64(cfg.base_seed, kRunTag));
    for (std::size_t i = 0; i < pred.m_list.size(); ++i)
        log << "[mff]   m=" << pred.m_list[i] << " mean err " << pred.mean_error[i] << "\n";
    log << "[mff]   fitted slope " << pred.fitted_slope << "\n";

    json volterra = json::object();
    {
        Rng omega_rng(mix64(cfg.base_seed, 0x6f6d656761303031ULL));
        const Discrepancy omega = sample_omega_gaussian(base, omega_rng);
        const double horizon = cc.volterra_lrs.front() * static_cast<double>(cc.volterra_steps);
        for (double lr : cc.volterra_lrs) {
            const long steps = static_cast<long>(std::llround(horizon / lr));
            const std::vector<double> res = volterra_residual(base, omega, data, obj, lr, steps);
            double worst = 0.0;
            for (double r : res) worst = std::max(worst, r);
            volterra[fmt17(lr)] = worst;
            log << "[mff]   volterra lr=" << lr << " max residual " << worst << "\n";
        }
    }

    json j;
    j["M"] = cc.M;
    j["d"] = cc.d;
    j["activation"] = "tanh";
    j["m_list"] = cc.m_list;
    j["trials"] = cc.trials;
    j["err_by_m"] = pred.mean_error;
    j["fitted_slope"] = pred.fitted_slope;
    j["volterra_max_residual_by_lr"] = volterra;
    j["provenance"] = provenance_block(cfg);
    write_json_file(out_root / "clt_report.json", j);
    return 0;
}

// ------------------------------------------------------------ bound report ---

int run_bound_report(const ExperimentConfig& cfg, std::ostream& log) {
    const fs::path out_root(cfg.out_dir);
    fs::create_directories(out_root);
    const Target target = make_target(cfg);
    const double bound = mc_bound(target, NormSpec::population());
    json j;
    j["mc_bound_population"] = bound;
    j["target_norm_sq"] = population_inner(target, target);
    j["feature_second_moment"] =
        target.kind() == Target::Kind::teacher
            ? relu_selfnorm(cfg.d) * q_norm(target.teacher_ensemble(), 2.0)
            : relu_selfnorm(cfg.d);
    json per_m = json::object();
    for (std::size_t m : cfg.m_list) per_m[std::to_string(m)] = bound / static_cast<double>(m);
    j["static_mc_error_by_m"] = per_m;
    j["provenance"] = provenance_block(cfg);
    write_json_file(out_root / "bound.json", j);
    log << "[mff] mc bound (population norm) = " << bound << "\n";
    return 0;
}

}  // namespace

std::uint64_t seed_schedule(std::uint64_t base_seed, std::size_t width_idx, std::size_t run_idx) {
    return mix64(mix64(mix64(kRunTag, base_seed), static_cast<std::uint64_t>(width_idx)),
                 static_cast<std::uint64_t>(run_idx));
}

std::uint64_t teacher_seed(std::uint64_t base_seed) { return mix64(kTeacherTag, base_seed); }

std::uint64_t dataset_seed(std::uint64_t base_seed) { return mix64(kDatasetTag, base_seed); }

Target make_target(const ExperimentConfig& cfg) {
    switch (cfg.kind) {
        case ExperimentKind::nonplanted_pop: return Target::great_circle(cfg.d);
        default: break;
    }
    if (cfg.teacher.kind == TeacherSpec::Kind::fixed_angle)
        return Target::teacher(make_fixed_angle_teacher(cfg.d, cfg.teacher.alpha));
    Rng rng(teacher_seed(cfg.base_seed));
    return Target::teacher(make_sampled_teacher(cfg.d, cfg.teacher.width, rng));
}

ExperimentConfig parse_experiment_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    ExperimentConfig cfg;
    cfg.kind = kind_from_name(require_field<std::string>(j, "kind"));
    cfg.d = optional_field<int>(j, "d", cfg.d);
    cfg.m_list = optional_field<std::vector<std::size_t>>(j, "m_list", cfg.m_list);
    cfg.kappa = optional_field<std::size_t>(j, "kappa", cfg.kappa);
    cfg.lambda = optional_field<double>(j, "lambda", cfg.lambda);
    cfg.epochs = optional_field<long>(j, "epochs", cfg.epochs);
    cfg.lr = optional_field<double>(j, "lr", cfg.lr);
    cfg.rescale_by_d = optional_field<bool>(j, "rescale_by_d", cfg.rescale_by_d);
    cfg.init = parse_init(j);
    cfg.n = optional_field<std::size_t>(j, "n", cfg.n);
    cfg.base_seed = optional_field<std::uint64_t>(j, "base_seed", cfg.base_seed);
    cfg.out_dir = optional_field<std::string>(j, "out_dir", cfg.out_dir);
    cfg.record_wall_time = optional_field<bool>(j, "record_wall_time", cfg.record_wall_time);
    if (j.contains("snapshot_stride") && !j.at("snapshot_stride").is_null())
        cfg.snapshot_stride = require_field<long>(j, "snapshot_stride");
    if (j.contains("teacher")) {
        const json& t = j.at("teacher");
        const std::string tk = optional_field<std::string>(t, "kind", std::string("sampled"));
        if (tk == "sampled") cfg.teacher.kind = TeacherSpec::Kind::sampled;
        else if (tk == "fixed_angle") cfg.teacher.kind = TeacherSpec::Kind::fixed_angle;
        else throw ConfigError("config key 'teacher.kind': expected 'sampled' or 'fixed_angle'");
        cfg.teacher.width = optional_field<std::size_t>(t, "width", cfg.teacher.width);
        cfg.teacher.alpha = optional_field<double>(t, "alpha", cfg.teacher.alpha);
        if (cfg.teacher.width < 1) throw ConfigError("config key 'teacher.width': need >= 1");
    }
    if (j.contains("clt")) {
        const json& c = j.at("clt");
        cfg.clt.M = optional_field<std::size_t>(c, "M", cfg.clt.M);
        cfg.clt.d = optional_field<int>(c, "d", cfg.clt.d);
        cfg.clt.m_list = optional_field<std::vector<std::size_t>>(c, "m_list", cfg.clt.m_list);
        cfg.clt.trials = optional_field<int>(c, "trials", cfg.clt.trials);
        cfg.clt.steps = optional_field<long>(c, "steps", cfg.clt.steps);
        cfg.clt.lr = optional_field<double>(c, "lr", cfg.clt.lr);
        cfg.clt.n = optional_field<std::size_t>(c, "n", cfg.clt.n);
        cfg.clt.lambda = optional_field<double>(c, "lambda", cfg.clt.lambda);
        cfg.clt.volterra_steps = optional_field<long>(c, "volterra_steps", cfg.clt.volterra_steps);
        cfg.clt.volterra_lrs =
            optional_field<std::vector<double>>(c, "volterra_lrs", cfg.clt.volterra_lrs);
    }
    validate_config(cfg);
    return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    return load_experiment_config(path, {});
}

ExperimentConfig load_experiment_config(const std::string& path,
                                        const std::vector<std::string>& overrides) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    json j;
    try {
        j = json::parse(ss.str());
    } catch (const json::parse_error& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }
    for (const std::string& ov : overrides) {
        const auto eq = ov.find('=');
        if (eq == std::string::npos)
            throw ConfigError("override '" + ov + "': expected key=value");
        const std::string key = ov.substr(0, eq);
        const std::string value = ov.substr(eq + 1);
        json parsed;
        try {
            parsed = json::parse(value);
        } catch (const json::parse_error&) {
            parsed = value;  // plain string
        }
        // dotted paths address nested keys
        json* cursor = &j;
        std::size_t start = 0;
        for (;;) {
            const std::size_t dotp = key.find('.', start);
            if (dotp == std::string::npos) {
                (*cursor)[key.substr(start)] = parsed;
                break;
            }
            cursor = &(*cursor)[key.substr(start, dotp - start)];
            start = dotp + 1;
        }
    }
    return parse_experiment_config(j.dump());
}

std::string config_to_json(const ExperimentConfig& cfg) {
    json j;
    j["kind"] = kind_name(cfg.kind);
    j["d"] = cfg.d;
    j["m_list"] = cfg.m_list;
    j["kappa"] = cfg.kappa;
    j["lambda"] = cfg.lambda;
    j["epochs"] = cfg.epochs;
    j["lr"] = cfg.lr;
    j["rescale_by_d"] = cfg.rescale_by_d;
    j["init"] = init_to_json(cfg.init);
    j["n"] = cfg.n;
    j["base_seed"] = cfg.base_seed;
    // out_dir is a runtime location, not part of the experiment identity
    j["record_wall_time"] = cfg.record_wall_time;
    if (cfg.snapshot_stride) j["snapshot_stride"] = *cfg.snapshot_stride;
    j["teacher"] = json{{"kind", cfg.teacher.kind == TeacherSpec::Kind::sampled ? "sampled"
                                                                                : "fixed_angle"},
                        {"width", cfg.teacher.width},
                        {"alpha", cfg.teacher.alpha}};
    if (cfg.kind == ExperimentKind::clt_verify) {
        j["clt"] = json{{"M", cfg.clt.M},
                        {"d", cfg.clt.d},
                        {"m_list", cfg.clt.m_list},
                        {"trials", cfg.clt.trials},
                        {"steps", cfg.clt.steps},
                        {"lr", cfg.clt.lr},
                        {"n", cfg.clt.n},
                        {"lambda", cfg.clt.lambda},
                        {"volterra_steps", cfg.clt.volterra_steps},
                        {"volterra_lrs", cfg.clt.volterra_lrs}};
    }
    return j.dump(2);
}

int kernel_selftest(std::ostream& out, std::uint64_t seed, std::size_t mc_samples) {
    const int d = 16;
    int failures = 0;
    auto report = [&](const std::string& name, bool ok, double got, double want, double band) {
        out << (ok ? "[ok]   " : "[FAIL] ") << name << ": got " << got << ", expected " << want
            << " (band " << band << ")\n";
        if (!ok) ++failures;
    };

    Rng rng(seed);
    // kernel at alpha = pi/2 vs MC
    {
        const UnitVector z = UnitVector::axis(d + 1, 0);
        const UnitVector zp = UnitVector::axis(d + 1, 1);
        const auto mc = mc_spherical_integral(
            [&](const UnitVector& x) {
                return std::max(0.0, z.dot(x)) * std::max(0.0, zp.dot(x));
            },
            d, mc_samples, rng);
        const double closed = relu_arc_kernel(z, zp, d).value;
        report("relu_arc_kernel(a=pi/2)", std::fabs(mc.estimate - closed) <= 4 * mc.stderr_est,
               closed, mc.estimate, 4 * mc.stderr_est);
    }
    // generic-angle kernel vs MC
    {
        const UnitVector z = sample_uniform_sphere(d, rng);
        const UnitVector zp = sample_uniform_sphere(d, rng);
        const auto mc = mc_spherical_integral(
            [&](const UnitVector& x) {
                return std::max(0.0, z.dot(x)) * std::max(0.0, zp.dot(x));
            },
            d, mc_samples, rng);
        const double closed = relu_arc_kernel(z, zp, d).value;
        report("relu_arc_kernel(random)", std::fabs(mc.estimate - closed) <= 4 * mc.stderr_est,
               closed, mc.estimate, 4 * mc.stderr_est);
    }
    // selfnorm vs MC
    {
        const UnitVector z = sample_uniform_sphere(d, rng);
        const auto mc = mc_spherical_integral(
            [&](const UnitVector& x) {
                const double v = std::max(0.0, z.dot(x));
                return v * v;
            },
            d, mc_samples, rng);
        const double closed = relu_selfnorm(d);
        report("relu_selfnorm", std::fabs(mc.estimate - closed) <= 4 * mc.stderr_est, closed,
               mc.estimate, 4 * mc.stderr_est);
    }
    // great-circle potential vs MC over the circle
    {
        const UnitVector u = sample_uniform_sphere(d, rng);
        double mean = 0.0, m2 = 0.0;
        for (std::size_t i = 0; i < mc_samples; ++i) {
            const double psi = rng.uniform(0.0, 2.0 * std::numbers::pi);
            std::vector<double> zc(static_cast<std::size_t>(d) + 1, 0.0);
            zc[0] = std::cos(psi);
            zc[1] = std::sin(psi);
            const double f = arc_kernel_from_cos(u[0] * zc[0] + u[1] * zc[1], d);
            const double delta = f - mean;
            mean += delta / static_cast<double>(i + 1);
            m2 += delta * (f - mean);
        }
        const double se = std::sqrt(m2 / static_cast<double>(mc_samples - 1) /
                                    static_cast<double>(mc_samples));
        const double closed = great_circle_potential(u, d);
        report("great_circle_potential", std::fabs(mean - closed) <= 4 * se, closed, mean, 4 * se);
    }
    // great-circle target value vs the defining integral. The integrand
    // max(0, x0 cos psi + x1 sin psi) has kinks at its zero crossings, so the
    // oracle locates them by bisection and applies Simpson on the smooth arcs.
    {
        const UnitVector x = sample_uniform_sphere(d, rng);
        const double two_pi = 2.0 * std::numbers::pi;
        auto f = [&](double psi) {
            return std::max(0.0, x[0] * std::cos(psi) + x[1] * std::sin(psi));
        };
        auto raw = [&](double psi) { return x[0] * std::cos(psi) + x[1] * std::sin(psi); };
        std::vector<double> cuts{0.0, two_pi};
        const int probe = 1024;
        for (int k = 0; k < probe; ++k) {
            double lo = two_pi * k / probe, hi = two_pi * (k + 1) / probe;
            if (raw(lo) * raw(hi) < 0.0) {
                for (int it = 0; it < 60; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    (raw(lo) * raw(mid) <= 0.0 ? hi : lo) = mid;
                }
                cuts.push_back(0.5 * (lo + hi));
            }
        }
        std::sort(cuts.begin(), cuts.end());
        double quad = 0.0;
        for (std::size_t seg = 0; seg + 1 < cuts.size(); ++seg) {
            const double a = cuts[seg], b = cuts[seg + 1];
            const int steps = 256;  // composite Simpson per smooth arc
            const double h = (b - a) / (2 * steps);
            double s = f(a) + f(b);
            for (int k = 1; k < 2 * steps; ++k) s += f(a + h * k) * (k % 2 ? 4.0 : 2.0);
            quad += s * h / 3.0;
        }
        quad /= two_pi;
        const double closed = great_circle_target_value(x);
        report("great_circle_target_value", std::fabs(quad - closed) <= 1e-10, closed, quad, 1e-10);
    }
    // PSD of a random Gram matrix
    {
        const int count = 16;
        std::vector<UnitVector> zs;
        for (int i = 0; i < count; ++i) zs.push_back(sample_uniform_sphere(d, rng));
        SymMat gram(count);
        for (int i = 0; i < count; ++i)
            for (int k = 0; k < count; ++k)
                gram.at(i, k) = relu_arc_kernel(zs[static_cast<std::size_t>(i)],
                                                zs[static_cast<std::size_t>(k)], d)
                                    .value;
        const double lam = min_eigenvalue(gram);
        report("kernel_gram_psd", lam >= -1e-10, lam, 0.0, 1e-10);
    }
    out << (failures == 0 ? "[ok]   kernel selftest passed\n"
                          : "[FAIL] kernel selftest: " + std::to_string(failures) + " failure(s)\n");
    return failures == 0 ? 0 : 3;
}

int run_experiment(const ExperimentConfig& cfg, std::ostream& log) {
    try {
        switch (cfg.kind) {
            case ExperimentKind::student_teacher_pop:
            case ExperimentKind::student_teacher_erm:
            case ExperimentKind::nonplanted_pop: return run_sweep(cfg, log);
            case ExperimentKind::clt_verify: return run_clt_verify(cfg, log);
            case ExperimentKind::bound_report: return run_bound_report(cfg, log);
            case ExperimentKind::kernel_selftest: return kernel_selftest(log);
        }
    } catch (const std::exception& e) {
        // keep partial outputs, record what failed
        try {
            fs::create_directories(cfg.out_dir);
            json fail;
            fail["error"] = e.what();
            fail["kind"] = kind_name(cfg.kind);
            write_json_file(fs::path(cfg.out_dir) / "failure.json", fail);
        } catch (...) {
        }
        log << "[mff] numerical failure: " << e.what() << "\n";
        return 2;
    }
    return 2;
}

}  // namespace mff
