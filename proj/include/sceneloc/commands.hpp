#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sceneloc/evaluation.hpp"
#include "sceneloc/run_config.hpp"
#include "sceneloc/trainer.hpp"

namespace sceneloc {

/// Subcommand bodies shared by the command-line tool, the tests and the
/// Python module. Each one writes the resolved config to
/// `<out>/config.txt` in addition to its own outputs.

/// Writes the dataset directory to `out`.
Dataset run_simulate(Config& cfg, const std::filesystem::path& out);

/// Initial network from `model.*` keys, or from the checkpoint named by
/// `model.init` when set.
NetParams initial_params(Config& cfg);

/// Writes train_log.csv, checkpoints/epoch_<e>.bin for every epoch and
/// model.bin (final parameters). `on_epoch` runs after each log line.
TrainResult run_train(Config& cfg, const std::filesystem::path& data, const std::filesystem::path& out,
                      const EpochCallback& on_epoch = {});

/// Segment statistics of dead reckoning, the raw readings and the learned
/// fusion; writes metrics.csv and trajectory.csv.
CompareResult run_eval(Config& cfg, const std::filesystem::path& data, const std::filesystem::path& model,
                       const std::filesystem::path& out);

/// Full method comparison; writes metrics.csv and trajectory.csv. The
/// method list comes from `compare.methods` (comma separated).
CompareResult run_compare(Config& cfg, const std::filesystem::path& data,
                          const std::optional<std::filesystem::path>& calib,
                          const std::optional<std::filesystem::path>& model, const std::filesystem::path& out);

std::vector<std::string> split_list(const std::string& s);

}  // namespace sceneloc
