#include "sceneloc/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "sceneloc/checkpoint.hpp"
#include "sceneloc/dataset.hpp"
#include "sceneloc/errors.hpp"

namespace sceneloc {

namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& p, const std::string& s) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw DataError("cannot write " + p.string());
    out << s;
}

std::string join(const std::vector<std::string>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
    return s;
}

}  // namespace

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        const auto next = s.find(',', pos);
        std::string item = s.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
        item.erase(0, item.find_first_not_of(' '));
        item.erase(item.find_last_not_of(' ') + 1);
        if (!item.empty()) out.push_back(item);
        if (next == std::string::npos) break;
        pos = next + 1;
    }
    return out;
}

Dataset run_simulate(Config& cfg, const fs::path& out) {
    Dataset ds = simulate_from_config(cfg);
    save_dataset(ds, out);
    cfg.save(out / "config.txt");
    return ds;
}

NetParams initial_params(Config& cfg) {
    const std::string init_path = cfg.get_string("model.init", "");
    if (!init_path.empty()) return load_checkpoint(init_path);
    NetInit init;
    init.sigma_xy = cfg.get_double("model.sigma_xy", init.sigma_xy);
    init.sigma_theta = cfg.get_double("model.sigma_theta", init.sigma_theta);
    init.head_weight_scale = cfg.get_double("model.head_weight_scale", init.head_weight_scale);
    init.seed = cfg.get_u64("model.seed", init.seed);
    return init_params(Architecture{}, init);
}

TrainResult run_train(Config& cfg, const fs::path& data, const fs::path& out, const EpochCallback& on_epoch) {
    cfg.set("input.data", data.string());
    const TrainConfig tc = train_config_from(cfg);
    const NetParams init = initial_params(cfg);
    TrainingData td(load_dataset(data), grid_spec_for(init.arch, tc.grid_cell));

    fs::create_directories(out / "checkpoints");
    cfg.save(out / "config.txt");
    std::ofstream log(out / "train_log.csv", std::ios::binary);
    if (!log) throw DataError("cannot write training log");
    log << kTrainLogHeader << '\n';

    TrainResult res = train(td, tc, init, [&](const EpochStats& st, const NetParams& p) {
        const std::string line = format_epoch_line(st);
        log << line << '\n';
        log.flush();
        char name[32];
        std::snprintf(name, sizeof(name), "epoch_%03d.bin", st.epoch);
        save_checkpoint(p, out / "checkpoints" / name);
        if (on_epoch) on_epoch(st, p);
    });
    save_checkpoint(res.params, out / "model.bin");
    return res;
}

CompareResult run_eval(Config& cfg, const fs::path& data, const fs::path& model, const fs::path& out) {
    cfg.set("input.data", data.string());
    cfg.set("input.model", model.string());
    const EvalOptions opt = eval_options_from(cfg);
    const Dataset ds = load_dataset(data);
    const NetParams params = load_checkpoint(model);
    const CompareResult res =
        compare_methods(ds, std::nullopt, params, {"dr_only", "eso_only", "fused_learned"}, opt);
    fs::create_directories(out);
    cfg.save(out / "config.txt");
    write_text(out / "metrics.csv", format_metrics(res));
    write_text(out / "trajectory.csv", format_trajectories(res));
    return res;
}

CompareResult run_compare(Config& cfg, const fs::path& data, const std::optional<fs::path>& calib,
                          const std::optional<fs::path>& model, const fs::path& out) {
    cfg.set("input.data", data.string());
    if (calib) cfg.set("input.calib", calib->string());
    if (model) cfg.set("input.model", model->string());
    const EvalOptions opt = eval_options_from(cfg);
    const std::vector<std::string> methods = split_list(cfg.get_string("compare.methods", join(all_methods())));

    const Dataset ds = load_dataset(data);
    std::optional<Dataset> calib_ds;
    if (calib) calib_ds = load_dataset(*calib);
    std::optional<NetParams> params;
    if (model) params = load_checkpoint(*model);
    if (!params && std::find(methods.begin(), methods.end(), "fused_learned") != methods.end()) {
        throw DataError("fused_learned needs a model checkpoint (--model)");
    }

    const CompareResult res = compare_methods(ds, calib_ds, params, methods, opt);
    fs::create_directories(out);
    cfg.save(out / "config.txt");
    write_text(out / "metrics.csv", format_metrics(res));
    write_text(out / "trajectory.csv", format_trajectories(res));
    return res;
}

}  // namespace sceneloc
