#include "sceneloc/trainer.hpp"

#include <cmath>

#include "sceneloc/errors.hpp"

namespace sceneloc {

namespace {

// d rotation2(a) / da
Eigen::Matrix2d rotation2_derivative(double a) {
    const double c = std::cos(a), s = std::sin(a);
    Eigen::Matrix2d d;
    d << -s, -c, c, -s;
    return d;
}

Eigen::Matrix3d sym(const Eigen::Matrix3d& m) { return symmetrize(m); }

}  // namespace

void TrainConfig::validate() const {
    if (T < 1) throw InvalidArgument("T must be >= 1");
    if (!(lambda >= 0.0)) throw InvalidArgument("lambda must be >= 0");
    if (!(learning_rate >= 0.0)) throw InvalidArgument("learning rate must be >= 0");
    if (!(clip_norm > 0.0)) throw InvalidArgument("clip norm must be positive");
    if (epochs < 0) throw InvalidArgument("epochs must be >= 0");
    if (!(kappa >= 0.0)) throw InvalidArgument("kappa must be >= 0");
    if (stride < 0) throw InvalidArgument("stride must be >= 0");
    if (!(sigma0 > 0.0)) throw InvalidArgument("sigma0 must be positive");
    if (!(grid_cell > 0.0)) throw InvalidArgument("grid cell must be positive");
}

TrainConfig train_config_from(Config& c) {
    TrainConfig t;
    t.T = c.get_int("train.T", t.T);
    t.lambda = c.get_double("train.lambda", t.lambda);
    t.learning_rate = c.get_double("train.learning_rate", t.learning_rate);
    t.clip_norm = c.get_double("train.clip_norm", t.clip_norm);
    t.epochs = c.get_int("train.epochs", t.epochs);
    t.kappa = c.get_double("train.kappa", t.kappa);
    const std::string seg = c.get_string("train.segmentation", "fixed");
    if (seg == "fixed") {
        t.segmentation = Segmentation::fixed;
    } else if (seg == "gate") {
        t.segmentation = Segmentation::gate;
    } else {
        throw InvalidArgument("train.segmentation must be fixed or gate");
    }
    t.stride = c.get_int("train.stride", t.stride);
    t.sigma0 = c.get_double("filter.sigma0", t.sigma0);
    t.grid_cell = c.get_double("grid.cell", t.grid_cell);
    t.validate();
    return t;
}

double loss(const Pose2& mu_g, const Pose2& x_g, double lambda) {
    const double dx = mu_g.x - x_g.x, dy = mu_g.y - x_g.y;
    const double dth = angle_diff(mu_g.theta, x_g.theta);
    return dx * dx + dy * dy + lambda * dth * dth;
}

bool supervision_gate(const Pose2& x_g, const Pose2& mu_g, double e, double kappa) {
    if (!(e > 0.0)) throw InvalidArgument("gate noise level must be positive");
    return std::hypot(x_g.x - mu_g.x, x_g.y - mu_g.y) > kappa * e;
}

GridSpec grid_spec_for(const Architecture& arch, double cell) {
    return GridSpec{arch.in_width, arch.in_height, cell};
}

TrainingData::TrainingData(Dataset ds, const GridSpec& s) : dataset(std::move(ds)), spec(s) {
    grids.reserve(dataset.frames.size());
    for (const Frame& f : dataset.frames) grids.push_back(rasterize(f.scan, spec));
}

NoiseCov TrainingData::dr_cov(int t) const {
    return dataset.sim.dr_cov(translation_scale(dataset.frames.at(t).u));
}

std::vector<TrainSegment> fixed_segments(const Dataset& ds, int T, int stride) {
    if (T < 1) throw InvalidArgument("T must be >= 1");
    if (stride <= 0) stride = T;
    std::vector<TrainSegment> out;
    const int n = static_cast<int>(ds.frames.size());
    for (int s = 0; s + T < n; s += stride) {
        if (ds.frames[s].gps && ds.frames[s + T].gps) out.push_back(TrainSegment{s, T});
    }
    return out;
}

Rollout forward_rollout(const TrainingData& data, const TrainSegment& seg, const NetParams& params,
                        const TrainConfig& cfg) {
    const auto& frames = data.dataset.frames;
    if (seg.steps < 1 || seg.start < 0 || seg.start + seg.steps >= static_cast<int>(frames.size())) {
        throw InvalidArgument("segment outside the dataset");
    }
    if (!frames[seg.start].gps) throw InvalidArgument("segment must start at a global fix");

    Rollout r;
    RolloutTape& tape = r.tape;
    tape.segment = seg;
    tape.g0 = *frames[seg.start].gps;
    tape.s0 = initial_info_state(cfg.sigma0);
    tape.steps.reserve(seg.steps);
    r.global.reserve(seg.steps + 1);
    r.global.push_back(tape.g0);

    InfoState state = tape.s0;
    Pose2 mu_prev = Pose2::identity();
    Pose2 g = tape.g0;
    for (int k = 1; k <= seg.steps; ++k) {
        const int t = seg.start + k;
        StepRecord rec;
        rec.frame = t;
        rec.u = frames[t].u;
        rec.z = frames[t].z;
        rec.R = data.dr_cov(t);
        rec.mu_prev = mu_prev;
        rec.s_prev = state;
        // The reference scan of the reading z_t is the previous frame's.
        ForwardResult fr = forward(params, data.grids[t - 1]);
        rec.descriptor = fr.descriptor;
        rec.cache = std::move(fr.cache);
        rec.q = descriptor_to_info(rec.descriptor);
        const Observation obs{rec.z, rec.q};
        rec.trace = rpf_step_traced(state, mu_prev, rec.u, rec.R, std::span<const Observation>(&obs, 1));
        rec.mu = Pose2::from_vector(rec.trace.mu);
        rec.g_prev = g;
        g = compose(g, rec.mu);
        rec.g = g;

        state = InfoState{rec.trace.xi, rec.trace.omega};
        mu_prev = rec.mu;
        r.global.push_back(g);
        tape.steps.push_back(std::move(rec));
    }
    return r;
}

std::vector<Pose2> replay_tape(const RolloutTape& tape) {
    std::vector<Pose2> out{tape.g0};
    InfoState state = tape.s0;
    Pose2 mu_prev = Pose2::identity();
    Pose2 g = tape.g0;
    for (const StepRecord& rec : tape.steps) {
        const Observation obs{rec.z, rec.q};
        const RpfTrace tr = rpf_step_traced(state, mu_prev, rec.u, rec.R, std::span<const Observation>(&obs, 1));
        mu_prev = Pose2::from_vector(tr.mu);
        state = InfoState{tr.xi, tr.omega};
        g = compose(g, mu_prev);
        out.push_back(g);
    }
    return out;
}

GradientResult loss_gradient(const RolloutTape& tape, const Pose2& x_g, const NetParams& params,
                             const TrainConfig& cfg) {
    if (tape.steps.empty()) throw InvalidArgument("empty tape");
    GradientResult res;
    res.grad.assign(params.theta.size(), 0.0);
    res.dq.assign(tape.steps.size(), Eigen::Matrix3d::Zero());

    const Pose2& gT = tape.steps.back().g;
    res.loss = loss(gT, x_g, cfg.lambda);

    Eigen::Vector3d gbar(2.0 * (gT.x - x_g.x), 2.0 * (gT.y - x_g.y),
                         2.0 * cfg.lambda * angle_diff(gT.theta, x_g.theta));
    double mu_theta_carry = 0.0;                          // from the next step's frame rotation
    Eigen::Matrix3d omega_carry = Eigen::Matrix3d::Zero();  // from the next step's prediction

    for (int k = static_cast<int>(tape.steps.size()) - 1; k >= 0; --k) {
        const StepRecord& rec = tape.steps[k];
        const RpfTrace& tr = rec.trace;

        // g = compose(g_prev, mu)
        const Eigen::Matrix2d rot = rotation2(rec.g_prev.theta);
        const Eigen::Vector2d mu_xy(rec.mu.x, rec.mu.y);
        Eigen::Vector3d mubar;
        mubar.head<2>() = rot.transpose() * gbar.head<2>();
        mubar[2] = gbar[2] + mu_theta_carry;
        Eigen::Vector3d gbar_prev = gbar;
        gbar_prev[2] += gbar.head<2>().dot(rotation2_derivative(rec.g_prev.theta) * mu_xy);

        // mu = Omega^-1 xi
        const Eigen::Matrix3d& B = tr.omega_inv;
        const Eigen::Vector3d xi_adj = B.transpose() * mubar;
        const Eigen::Matrix3d omega_adj = omega_carry - xi_adj * (B * tr.xi).transpose();

        // Omega = sym(Omega_bar + Q), xi = xi_bar + Q z, xi_bar = Omega_bar u
        const Eigen::Matrix3d S = sym(omega_adj);
        const Eigen::Matrix3d q_adj = S + xi_adj * rec.z.vector().transpose();
        const Eigen::Matrix3d omega_bar_adj = S + xi_adj * rec.u.vector().transpose();

        // Omega_bar = sym(P^-1), P = Omega_hat^-1 + R
        const Eigen::Matrix3d& C = tr.omega_bar;
        const Eigen::Matrix3d p_adj = -C.transpose() * sym(omega_bar_adj) * C.transpose();
        const Eigen::Matrix3d& A = tr.omega_hat_inv;
        const Eigen::Matrix3d K = sym(-A.transpose() * p_adj * A.transpose());

        // Omega_hat = sym(M Omega_prev M^T), M = rotation by -mu_prev.theta
        const Eigen::Matrix3d& M = tr.rot;
        if (k > 0) {
            const Eigen::Matrix3d& omega_prev = rec.s_prev.omega;
            omega_carry = M.transpose() * K * M;
            const Eigen::Matrix3d m_adj = 2.0 * K * M * omega_prev;
            const Eigen::Matrix2d dm = rotation2_derivative(-rec.mu_prev.theta);
            mu_theta_carry = -(m_adj.topLeftCorner<2, 2>().cwiseProduct(dm)).sum();
        }

        // Q = sym(L L^T)
        const Eigen::Matrix3d qs = sym(q_adj);
        res.dq[k] = qs;
        const Eigen::Matrix3d l_adj = 2.0 * qs * rec.descriptor.factor();
        Eigen::Matrix<double, 6, 1> d_adj;
        d_adj << l_adj(0, 0), l_adj(1, 0), l_adj(1, 1), l_adj(2, 0), l_adj(2, 1), l_adj(2, 2);
        backward_accumulate(params, rec.cache, d_adj, res.grad);

        gbar = gbar_prev;
    }
    return res;
}

UpdateResult backward_update(const RolloutTape& tape, const Pose2& x_g, const NetParams& params,
                             const TrainConfig& cfg) {
    const GradientResult g = loss_gradient(tape, x_g, params, cfg);
    UpdateResult out;
    out.params = params;
    out.loss = g.loss;
    double sq = 0.0;
    for (double v : g.grad) sq += v * v;
    out.grad_norm = std::sqrt(sq);
    if (!std::isfinite(out.grad_norm)) return out;
    const double scale = out.grad_norm > cfg.clip_norm ? cfg.clip_norm / out.grad_norm : 1.0;
    for (std::size_t i = 0; i < g.grad.size(); ++i) {
        out.params.theta[i] -= cfg.learning_rate * scale * g.grad[i];
    }
    out.applied = true;
    return out;
}

EpochStats evaluate_segments(const TrainingData& data, const std::vector<TrainSegment>& segs,
                             const NetParams& params, const TrainConfig& cfg) {
    EpochStats st;
    for (const TrainSegment& seg : segs) {
        try {
            const Rollout r = forward_rollout(data, seg, params, cfg);
            const Pose2& est = r.global.back();
            const Pose2& fix = *data.dataset.frames[seg.start + seg.steps].gps;
            st.mean_loss += loss(est, fix, cfg.lambda);
            st.mean_dist_err += std::hypot(est.x - fix.x, est.y - fix.y);
            st.mean_heading_err += std::abs(angle_diff(est.theta, fix.theta));
            ++st.segments;
        } catch (const NumericalError&) {
            ++st.skipped;
        }
    }
    if (st.segments > 0) {
        st.mean_loss /= st.segments;
        st.mean_dist_err /= st.segments;
        st.mean_heading_err /= st.segments;
    }
    return st;
}

TrainSegment gate_segment(const TrainingData& data, int start, const NetParams& params, const TrainConfig& cfg) {
    const auto& frames = data.dataset.frames;
    const int n = static_cast<int>(frames.size());
    const int steps = std::min(cfg.T, n - 1 - start);
    if (steps < 1 || !frames[start].gps) return TrainSegment{start, 0};
    const Rollout r = forward_rollout(data, TrainSegment{start, steps}, params, cfg);
    int last_fix = 0;
    for (int k = 1; k <= steps; ++k) {
        const auto& fix = frames[start + k].gps;
        if (!fix) continue;
        last_fix = k;
        if (supervision_gate(*fix, r.global[k], data.dataset.sim.gps_sigma, cfg.kappa)) break;
    }
    return TrainSegment{start, last_fix};
}

namespace {

std::vector<TrainSegment> training_segments(const TrainingData& data, const NetParams& params, const TrainConfig& cfg) {
    if (cfg.segmentation == Segmentation::fixed) return fixed_segments(data.dataset, cfg.T, cfg.stride);
    std::vector<TrainSegment> out;
    const int n = static_cast<int>(data.dataset.frames.size());
    int s = 0;
    while (s < n - 1) {
        TrainSegment seg{s, 0};
        try {
            seg = gate_segment(data, s, params, cfg);
        } catch (const NumericalError&) {
        }
        if (seg.steps == 0) {
            ++s;
            continue;
        }
        out.push_back(seg);
        s += seg.steps;
    }
    return out;
}

}  // namespace

TrainResult train(const TrainingData& data, const TrainConfig& cfg, const NetParams& init,
                  const EpochCallback& on_epoch) {
    cfg.validate();
    const std::vector<TrainSegment> eval_segs = fixed_segments(data.dataset, cfg.T, cfg.stride);
    if (eval_segs.empty()) throw DataError("dataset has no segment with global fixes at both ends");

    TrainResult res;
    res.params = init;
    res.trace.push_back(evaluate_segments(data, eval_segs, res.params, cfg));
    if (on_epoch) on_epoch(res.trace.back(), res.params);

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        int skipped = 0;
        for (const TrainSegment& seg : training_segments(data, res.params, cfg)) {
            const Pose2& fix = *data.dataset.frames[seg.start + seg.steps].gps;
            try {
                const Rollout r = forward_rollout(data, seg, res.params, cfg);
                UpdateResult u = backward_update(r.tape, fix, res.params, cfg);
                if (u.applied) {
                    res.params = std::move(u.params);
                } else {
                    ++skipped;
                }
            } catch (const NumericalError&) {
                ++skipped;
            }
        }
        EpochStats st = evaluate_segments(data, eval_segs, res.params, cfg);
        st.epoch = epoch;
        st.skipped += skipped;
        res.trace.push_back(st);
        if (on_epoch) on_epoch(st, res.params);
    }
    return res;
}

std::string format_epoch_line(const EpochStats& s) {
    return std::to_string(s.epoch) + ',' + format_double(s.mean_loss) + ',' + format_double(s.mean_dist_err) + ',' +
           format_double(s.mean_heading_err);
}

}  // namespace sceneloc
