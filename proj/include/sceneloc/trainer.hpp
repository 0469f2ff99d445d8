#pragma once

#include <functional>
#include <string>
#include <vector>

#include "sceneloc/fusion_filter.hpp"
#include "sceneloc/network.hpp"
#include "sceneloc/run_config.hpp"
#include "sceneloc/simulator.hpp"

namespace sceneloc {

enum class Segmentation {
    fixed,  ///< consecutive windows of T steps between global fixes
    gate,   ///< end a window at the first global fix that passes the gate
};

struct TrainConfig {
    int T = 100;
    double lambda = 100.0;
    double learning_rate = 1e-3;
    double clip_norm = 1.0;
    int epochs = 30;
    double kappa = 3.0;
    Segmentation segmentation = Segmentation::fixed;
    /// Frames between consecutive segment starts; 0 means T.
    int stride = 0;
    double sigma0 = kDefaultInitialSigma;
    double grid_cell = 2.4;

    /// Throws InvalidArgument on T < 1, lambda < 0, clip <= 0 and similar.
    void validate() const;
};

TrainConfig train_config_from(Config& c);

/// |mu - x|^2 over position plus lambda times the squared wrapped heading
/// difference.
double loss(const Pose2& mu_g, const Pose2& x_g, double lambda);

/// True iff the position deviation is strictly above kappa * e. Throws
/// InvalidArgument unless e > 0.
bool supervision_gate(const Pose2& x_g, const Pose2& mu_g, double e, double kappa);

/// A dataset with the network input of every frame rasterized once.
struct TrainingData {
    TrainingData(Dataset ds, const GridSpec& spec);

    Dataset dataset;
    GridSpec spec;
    std::vector<SceneGrid> grids;

    /// Dead reckoning covariance the filter assumes for frame t.
    NoiseCov dr_cov(int t) const;
};

/// Raster geometry matching a network's input size.
GridSpec grid_spec_for(const Architecture& arch, double cell);

/// Steps start + 1 ... start + steps; frames start and start + steps both
/// carry a global fix.
struct TrainSegment {
    int start = 0;
    int steps = 0;
};

/// Windows of T steps starting every `stride` frames (0 means T) whose both
/// ends carry a global fix.
std::vector<TrainSegment> fixed_segments(const Dataset& ds, int T, int stride = 0);

/// Everything one step of the rollout produced.
struct StepRecord {
    int frame = 0;
    Pose2 u, z;
    NoiseCov R;
    Pose2 mu_prev;
    InfoState s_prev;
    InfoDescriptor descriptor;
    InfoMatrix q;
    ForwardCache cache;
    RpfTrace trace;
    Pose2 mu;      ///< wrapped posterior mean
    Pose2 g_prev;  ///< global estimate before the step
    Pose2 g;       ///< global estimate after the step
};

struct RolloutTape {
    TrainSegment segment;
    Pose2 g0;
    InfoState s0;
    std::vector<StepRecord> steps;
};

struct Rollout {
    /// Global estimates for frames start ... start + steps.
    std::vector<Pose2> global;
    RolloutTape tape;
};

/// Runs network, filter and global accumulation over the segment, starting
/// at the global fix of its first frame. Throws SingularStateError if the
/// filter breaks down.
Rollout forward_rollout(const TrainingData& data, const TrainSegment& seg, const NetParams& params,
                        const TrainConfig& cfg);

/// Recomputes the global trajectory from the recorded inputs and
/// information matrices. Bitwise equal to the rollout that made the tape.
std::vector<Pose2> replay_tape(const RolloutTape& tape);

struct GradientResult {
    double loss = 0.0;
    std::vector<double> grad;          ///< dJ/dtheta
    std::vector<Eigen::Matrix3d> dq;   ///< dJ/dQ per step
};

/// Reverse-mode gradient of loss(g_T, x_g) through the global composition,
/// the filter steps, the Cholesky map and the network.
GradientResult loss_gradient(const RolloutTape& tape, const Pose2& x_g, const NetParams& params,
                             const TrainConfig& cfg);

struct UpdateResult {
    NetParams params;
    double loss = 0.0;
    double grad_norm = 0.0;
    /// False when the gradient was not finite and the update was skipped.
    bool applied = false;
};

/// One clipped gradient descent step.
UpdateResult backward_update(const RolloutTape& tape, const Pose2& x_g, const NetParams& params,
                             const TrainConfig& cfg);

struct EpochStats {
    int epoch = 0;
    double mean_loss = 0.0;
    double mean_dist_err = 0.0;
    double mean_heading_err = 0.0;
    int segments = 0;
    int skipped = 0;  ///< segments or updates dropped for numerical reasons
};

/// Mean segment-end loss and errors of `params` on the given segments.
EpochStats evaluate_segments(const TrainingData& data, const std::vector<TrainSegment>& segs,
                             const NetParams& params, const TrainConfig& cfg);

/// TrainSegment that starts at `start` and ends at the first global fix within T
/// steps whose deviation passes the gate, or at the last fix within T steps.
/// Returns steps = 0 if there is none.
TrainSegment gate_segment(const TrainingData& data, int start, const NetParams& params, const TrainConfig& cfg);

struct TrainResult {
    NetParams params;
    /// Entry 0 evaluates the initial parameters, entry e the parameters
    /// after epoch e.
    std::vector<EpochStats> trace;
};

using EpochCallback = std::function<void(const EpochStats&, const NetParams&)>;

/// Throws DataError when the dataset has no supervised segment.
TrainResult train(const TrainingData& data, const TrainConfig& cfg, const NetParams& init,
                  const EpochCallback& on_epoch = {});

/// `epoch,mean_loss,mean_dist_err_m,mean_heading_err_rad`
std::string format_epoch_line(const EpochStats& s);
inline constexpr const char* kTrainLogHeader = "epoch,mean_loss,mean_dist_err_m,mean_heading_err_rad";

}  // namespace sceneloc
