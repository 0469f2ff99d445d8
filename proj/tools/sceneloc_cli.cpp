// sceneloc: simulate datasets, train the scene error model, evaluate and
// compare fusion methods.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sceneloc/commands.hpp"
#include "sceneloc/errors.hpp"

namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

struct Common {
    std::string config;
    std::vector<std::string> overrides;
    std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config, "Config file with key = value lines");
    cmd->add_option("--set", c.overrides, "Override a config key (key=value), repeatable");
    cmd->add_option("--out", c.out, "Output directory")->required();
}

sceneloc::Config resolve(const Common& c) {
    sceneloc::Config cfg;
    if (!c.config.empty()) cfg = sceneloc::Config::load(c.config);
    for (const auto& o : c.overrides) cfg.apply_override(o);
    return cfg;
}

void print_metrics(const sceneloc::CompareResult& r) {
    std::printf("%-15s %8s %10s %10s %12s %12s\n", "method", "scale", "dist_mean", "dist_med", "head_mean",
                "head_med");
    for (const auto& row : r.rows) {
        std::printf("%-15s %8.4g %10.4f %10.4f %12.6f %12.6f\n", row.method.c_str(), row.scale,
                    row.stats.dist.mean, row.stats.dist.median, row.stats.heading.mean, row.stats.heading.median);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Scene-aware error modelling for odometry fusion"};
    app.require_subcommand(1);

    Common sim_opts, train_opts, eval_opts, cmp_opts;
    std::string train_data, eval_data, eval_model, cmp_data, cmp_calib, cmp_model;

    auto* sim = app.add_subcommand("simulate", "Generate a dataset directory");
    add_common(sim, sim_opts);

    auto* tr = app.add_subcommand("train", "Train the scene error model on a dataset");
    add_common(tr, train_opts);
    tr->add_option("--data", train_data, "Dataset directory")->required();

    auto* ev = app.add_subcommand("eval", "Segment errors of the learned fusion");
    add_common(ev, eval_opts);
    ev->add_option("--data", eval_data, "Dataset directory")->required();
    ev->add_option("--model", eval_model, "Model checkpoint")->required();

    auto* cmp = app.add_subcommand("compare", "Compare fusion methods on a dataset");
    add_common(cmp, cmp_opts);
    cmp->add_option("--data", cmp_data, "Test dataset directory")->required();
    cmp->add_option("--calib", cmp_calib, "Dataset used to rescale the baselines");
    cmp->add_option("--model", cmp_model, "Model checkpoint for the learned row");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        if (sim->parsed()) {
            auto cfg = resolve(sim_opts);
            const auto ds = sceneloc::run_simulate(cfg, sim_opts.out);
            std::printf("wrote %zu frames to %s\n", ds.frames.size(), sim_opts.out.c_str());
        } else if (tr->parsed()) {
            auto cfg = resolve(train_opts);
            std::printf("%s\n", sceneloc::kTrainLogHeader);
            sceneloc::run_train(cfg, train_data, train_opts.out, [](const sceneloc::EpochStats& st, const auto&) {
                std::printf("%s\n", sceneloc::format_epoch_line(st).c_str());
                std::fflush(stdout);
            });
        } else if (ev->parsed()) {
            auto cfg = resolve(eval_opts);
            print_metrics(sceneloc::run_eval(cfg, eval_data, eval_model, eval_opts.out));
        } else if (cmp->parsed()) {
            auto cfg = resolve(cmp_opts);
            std::optional<fs::path> calib, model;
            if (!cmp_calib.empty()) calib = cmp_calib;
            if (!cmp_model.empty()) model = cmp_model;
            print_metrics(sceneloc::run_compare(cfg, cmp_data, calib, model, cmp_opts.out));
        }
    } catch (const sceneloc::InvalidArgument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kUsage;
    } catch (const sceneloc::DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return kData;
    } catch (const sceneloc::NumericalError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return kNumerical;
    } catch (const fs::filesystem_error& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return kData;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kData;
    }
    return kOk;
}
