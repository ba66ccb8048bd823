#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mff/experiment.hpp"
#include "mff/parallel.hpp"

namespace {

int cmd_run(const std::string& config_path, const std::string& out_dir, int threads,
            const std::vector<std::string>& overrides, bool force_clt) {
    if (threads > 0) mff::par::set_thread_count(threads);
    mff::ExperimentConfig cfg;
    try {
        cfg = mff::load_experiment_config(config_path, overrides);
    } catch (const mff::ConfigError& e) {
        std::cerr << "mff: " << e.what() << "\n";
        return 1;
    }
    if (force_clt && cfg.kind != mff::ExperimentKind::clt_verify) {
        std::cerr << "mff: clt subcommand requires kind=clt_verify, got a different kind\n";
        return 1;
    }
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    return mff::run_experiment(cfg, std::cerr);
}

int cmd_bound(const std::string& ensemble_csv, bool use_teacher, int d, double alpha,
              bool sampled, std::uint64_t seed, const std::string& data_csv) {
    using nlohmann::json;
    try {
        json out;
        if (use_teacher) {
            mff::Ensemble teacher = [&] {
                if (sampled) {
                    mff::Rng rng(mff::teacher_seed(seed));
                    return mff::make_sampled_teacher(d, 2, rng);
                }
                return mff::make_fixed_angle_teacher(d, alpha);
            }();
            const mff::Target target = mff::Target::teacher(teacher);
            out["mc_bound_population"] = mff::mc_bound(target, mff::NormSpec::population());
            out["target_norm_sq"] = mff::population_inner(target, target);
            out["teacher_angle"] = std::acos(std::max(
                -1.0, std::min(1.0, mff::UnitVector(teacher.neuron(0).z)
                                        .dot(mff::UnitVector(teacher.neuron(1).z)))));
        } else if (!ensemble_csv.empty()) {
            const mff::Ensemble e = mff::read_ensemble_csv_file(ensemble_csv);
            out["mc_bound_population"] = mff::mc_bound(e, mff::NormSpec::population());
            if (!data_csv.empty()) {
                const mff::Dataset data = mff::read_dataset_csv_file(data_csv);
                out["mc_bound_empirical"] = mff::mc_bound(e, mff::NormSpec::empirical(data));
            }
        } else {
            std::cerr << "mff bound: give an ensemble CSV or --teacher\n";
            return 1;
        }
        std::cout << out.dump(2) << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "mff bound: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mff: finite-width fluctuations of shallow networks around their mean-field limit"};
    app.require_subcommand(1);

    std::string config_path, out_dir, data_csv, ensemble_csv;
    int threads = 0;
    std::vector<std::string> overrides;
    bool use_teacher = false, sampled = false;
    int bound_d = 16;
    double alpha = 1.766;
    std::uint64_t seed = 0;

    auto* run = app.add_subcommand("run", "execute an experiment config");
    run->add_option("config", config_path, "JSON config file")->required();
    run->add_option("--out", out_dir, "output directory (overrides config out_dir)");
    run->add_option("--threads", threads, "worker threads (default: hardware)");
    run->add_option("--override", overrides, "key=value config override (dotted keys allowed)");

    auto* selftest = app.add_subcommand("selftest", "kernel closed forms vs Monte-Carlo oracles");
    std::uint64_t selftest_seed = 20240709;
    selftest->add_option("--seed", selftest_seed, "oracle RNG seed");

    auto* bound = app.add_subcommand("bound", "asymptotic Monte-Carlo resampling bound");
    bound->add_option("ensemble", ensemble_csv, "ensemble CSV to treat as the measure");
    bound->add_flag("--teacher", use_teacher, "use the two-neuron teacher instead of a CSV");
    bound->add_flag("--sampled", sampled, "sample the teacher from the reserved stream");
    bound->add_option("--d", bound_d, "sphere dimension (default 16)");
    bound->add_option("--alpha", alpha, "teacher angle for the fixed-angle teacher");
    bound->add_option("--seed", seed, "base seed for --sampled");
    bound->add_option("--data", data_csv, "dataset CSV for the empirical-norm bound");

    auto* clt = app.add_subcommand("clt", "dynamical CLT verification (kind=clt_verify config)");
    clt->add_option("config", config_path, "JSON config file")->required();
    clt->add_option("--out", out_dir, "output directory");
    clt->add_option("--threads", threads, "worker threads");
    clt->add_option("--override", overrides, "key=value config override");

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) return cmd_run(config_path, out_dir, threads, overrides, false);
    if (selftest->parsed()) return mff::kernel_selftest(std::cout, selftest_seed);
    if (bound->parsed())
        return cmd_bound(ensemble_csv, use_teacher, bound_d, alpha, sampled, seed, data_csv);
    if (clt->parsed()) return cmd_run(config_path, out_dir, threads, overrides, true);
    return 1;
}
