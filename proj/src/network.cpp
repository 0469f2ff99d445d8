#include "sceneloc/network.hpp"

#include <cmath>
#include <string>

#include "sceneloc/errors.hpp"
#include "sceneloc/rng.hpp"

namespace sceneloc {

namespace {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using RowMajorMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr std::uint32_t kInitStreamTag = 0x4E4554;  // "NET"
constexpr int kDiagonal[3] = {0, 2, 5};

struct ConvGeom {
    int in_c, in_h, in_w;
    int out_c, out_h, out_w;
    int k, s;
    std::size_t w_off, b_off;

    std::size_t weight_count() const { return static_cast<std::size_t>(out_c) * in_c * k * k; }
    std::size_t out_size() const { return static_cast<std::size_t>(out_c) * out_h * out_w; }
};

struct DenseGeom {
    int in, out;
    std::size_t w_off, b_off;
};

struct Layout {
    std::vector<ConvGeom> convs;
    std::vector<DenseGeom> dense;  // hidden layers followed by the head
    std::size_t total = 0;
};

Layout make_layout(const Architecture& arch) {
    Layout l;
    int c = 1, h = arch.in_height, w = arch.in_width;
    std::size_t off = 0;
    for (const ConvLayerSpec& spec : arch.convs) {
        ConvGeom g{c, h, w, spec.out_channels, (h - spec.kernel) / spec.stride + 1,
                   (w - spec.kernel) / spec.stride + 1, spec.kernel, spec.stride, 0, 0};
        g.w_off = off;
        off += g.weight_count();
        g.b_off = off;
        off += g.out_c;
        l.convs.push_back(g);
        c = g.out_c;
        h = g.out_h;
        w = g.out_w;
    }
    int in = c * h * w;
    auto add_dense = [&](int out) {
        DenseGeom g{in, out, off, 0};
        off += static_cast<std::size_t>(in) * out;
        g.b_off = off;
        off += out;
        l.dense.push_back(g);
        in = out;
    };
    for (int n : arch.hidden) add_dense(n);
    add_dense(Architecture::kOutputs);
    l.total = off;
    return l;
}

void relu_inplace(std::vector<double>& v) {
    for (double& x : v) x = x > 0.0 ? x : 0.0;
}

void check_finite(const std::vector<double>& v, const char* where) {
    for (double x : v) {
        if (!std::isfinite(x)) throw NumericalError(std::string("non-finite activation in ") + where);
    }
}

void conv_forward(const ConvGeom& g, const double* theta, const std::vector<double>& in,
                  std::vector<double>& out) {
    out.assign(g.out_size(), 0.0);
    const double* W = theta + g.w_off;
    const double* b = theta + g.b_off;
    for (int oc = 0; oc < g.out_c; ++oc) {
        double* o = out.data() + static_cast<std::size_t>(oc) * g.out_h * g.out_w;
        for (int i = 0; i < g.out_h * g.out_w; ++i) o[i] = b[oc];
        for (int ic = 0; ic < g.in_c; ++ic) {
            const double* x = in.data() + static_cast<std::size_t>(ic) * g.in_h * g.in_w;
            const double* wk = W + (static_cast<std::size_t>(oc) * g.in_c + ic) * g.k * g.k;
            for (int oy = 0; oy < g.out_h; ++oy) {
                for (int ox = 0; ox < g.out_w; ++ox) {
                    double acc = 0.0;
                    for (int ky = 0; ky < g.k; ++ky) {
                        const double* row = x + static_cast<std::size_t>(oy * g.s + ky) * g.in_w + ox * g.s;
                        const double* wr = wk + ky * g.k;
                        for (int kx = 0; kx < g.k; ++kx) acc += wr[kx] * row[kx];
                    }
                    o[oy * g.out_w + ox] += acc;
                }
            }
        }
    }
    relu_inplace(out);
}

// grad_out is dL/d(post-ReLU output); it is masked in place. grad_in may be null.
void conv_backward(const ConvGeom& g, const double* theta, const std::vector<double>& in,
                   const std::vector<double>& out, std::vector<double>& grad_out, double* grad_theta,
                   std::vector<double>* grad_in) {
    for (std::size_t i = 0; i < grad_out.size(); ++i) {
        if (!(out[i] > 0.0)) grad_out[i] = 0.0;
    }
    const double* W = theta + g.w_off;
    double* dW = grad_theta + g.w_off;
    double* db = grad_theta + g.b_off;
    if (grad_in) grad_in->assign(static_cast<std::size_t>(g.in_c) * g.in_h * g.in_w, 0.0);
    for (int oc = 0; oc < g.out_c; ++oc) {
        const double* go = grad_out.data() + static_cast<std::size_t>(oc) * g.out_h * g.out_w;
        double bsum = 0.0;
        for (int i = 0; i < g.out_h * g.out_w; ++i) bsum += go[i];
        db[oc] += bsum;
        for (int ic = 0; ic < g.in_c; ++ic) {
            const std::size_t plane = static_cast<std::size_t>(ic) * g.in_h * g.in_w;
            const double* x = in.data() + plane;
            const std::size_t koff = (static_cast<std::size_t>(oc) * g.in_c + ic) * g.k * g.k;
            const double* wk = W + koff;
            double* dwk = dW + koff;
            double* gx = grad_in ? grad_in->data() + plane : nullptr;
            for (int oy = 0; oy < g.out_h; ++oy) {
                for (int ox = 0; ox < g.out_w; ++ox) {
                    const double gv = go[oy * g.out_w + ox];
                    if (gv == 0.0) continue;
                    for (int ky = 0; ky < g.k; ++ky) {
                        const std::size_t r = static_cast<std::size_t>(oy * g.s + ky) * g.in_w + ox * g.s;
                        for (int kx = 0; kx < g.k; ++kx) {
                            dwk[ky * g.k + kx] += gv * x[r + kx];
                            if (gx) gx[r + kx] += gv * wk[ky * g.k + kx];
                        }
                    }
                }
            }
        }
    }
}

Eigen::Map<const RowMajorMat> dense_weights(const DenseGeom& g, const double* theta) {
    return Eigen::Map<const RowMajorMat>(theta + g.w_off, g.out, g.in);
}

Vec6 head_to_descriptor(const Vec6& head) {
    Vec6 a = head;
    for (int i : kDiagonal) a[i] = std::exp(head[i]);
    return a;
}

}  // namespace

Architecture Architecture::linear(int in_height, int in_width) {
    Architecture a;
    a.in_height = in_height;
    a.in_width = in_width;
    a.convs.clear();
    a.hidden.clear();
    return a;
}

void Architecture::validate() const {
    if (in_height <= 0 || in_width <= 0) throw InvalidArgument("network input must be non-empty");
    int h = in_height, w = in_width;
    for (const ConvLayerSpec& c : convs) {
        if (c.out_channels <= 0 || c.kernel <= 0 || c.stride <= 0) {
            throw InvalidArgument("conv layer sizes must be positive");
        }
        if (c.kernel > h || c.kernel > w) throw InvalidArgument("conv kernel larger than its input");
        h = (h - c.kernel) / c.stride + 1;
        w = (w - c.kernel) / c.stride + 1;
    }
    for (int n : hidden) {
        if (n <= 0) throw InvalidArgument("dense layer width must be positive");
    }
}

std::size_t Architecture::parameter_count() const {
    validate();
    return make_layout(*this).total;
}

Vec6 nominal_head_bias(const NetInit& init) {
    if (!(init.sigma_xy > 0.0) || !(init.sigma_theta > 0.0)) {
        throw InvalidArgument("nominal sigmas must be positive");
    }
    Vec6 b = Vec6::Zero();
    b[0] = -std::log(init.sigma_xy);
    b[2] = -std::log(init.sigma_xy);
    b[5] = -std::log(init.sigma_theta);
    return b;
}

NetParams init_params(const Architecture& arch, const NetInit& init) {
    arch.validate();
    const Layout layout = make_layout(arch);
    NetParams p{arch, std::vector<double>(layout.total, 0.0)};
    CounterRng rng(init.seed, stream_id(kInitStreamTag, 0));
    for (const ConvGeom& g : layout.convs) {
        const double scale = std::sqrt(2.0 / (g.in_c * g.k * g.k));
        for (std::size_t i = 0; i < g.weight_count(); ++i) p.theta[g.w_off + i] = scale * rng.normal();
    }
    for (std::size_t li = 0; li < layout.dense.size(); ++li) {
        const DenseGeom& g = layout.dense[li];
        const bool is_head = li + 1 == layout.dense.size();
        const double scale = std::sqrt(2.0 / g.in) * (is_head ? init.head_weight_scale : 1.0);
        const std::size_t n = static_cast<std::size_t>(g.in) * g.out;
        for (std::size_t i = 0; i < n; ++i) p.theta[g.w_off + i] = scale == 0.0 ? 0.0 : scale * rng.normal();
    }
    const Vec6 bias = nominal_head_bias(init);
    const DenseGeom& head = layout.dense.back();
    for (int i = 0; i < 6; ++i) p.theta[head.b_off + i] = bias[i];
    return p;
}

ForwardResult forward(const NetParams& params, const SceneGrid& grid) {
    const Architecture& arch = params.arch;
    if (grid.rows() != arch.in_height || grid.cols() != arch.in_width) {
        throw InvalidArgument("scene grid size does not match network input");
    }
    const Layout layout = make_layout(arch);
    if (params.theta.size() != layout.total) throw InvalidArgument("parameter vector has wrong length");

    ForwardResult r;
    ForwardCache& c = r.cache;
    c.input.assign(grid.cells().begin(), grid.cells().end());
    const double* theta = params.theta.data();

    const std::vector<double>* x = &c.input;
    c.conv_out.resize(layout.convs.size());
    for (std::size_t i = 0; i < layout.convs.size(); ++i) {
        conv_forward(layout.convs[i], theta, *x, c.conv_out[i]);
        x = &c.conv_out[i];
    }
    c.hidden_out.resize(arch.hidden.size());
    for (std::size_t i = 0; i < layout.dense.size(); ++i) {
        const DenseGeom& g = layout.dense[i];
        Eigen::Map<const Eigen::VectorXd> xin(x->data(), g.in);
        Eigen::Map<const Eigen::VectorXd> b(theta + g.b_off, g.out);
        Eigen::VectorXd y = dense_weights(g, theta) * xin + b;
        if (i < arch.hidden.size()) {
            c.hidden_out[i].assign(y.data(), y.data() + g.out);
            relu_inplace(c.hidden_out[i]);
            x = &c.hidden_out[i];
        } else {
            c.head = y;
        }
    }
    for (const auto& v : c.conv_out) check_finite(v, "conv layer");
    for (const auto& v : c.hidden_out) check_finite(v, "dense layer");
    c.descriptor.a = head_to_descriptor(c.head);
    if (!c.descriptor.a.allFinite()) throw NumericalError("non-finite descriptor");
    r.descriptor = c.descriptor;
    return r;
}

InfoDescriptor predict_descriptor(const NetParams& params, const SceneGrid& grid) {
    return forward(params, grid).descriptor;
}

InfoMatrix predict_information(const NetParams& params, const SceneGrid& grid) {
    return descriptor_to_info(predict_descriptor(params, grid));
}

void backward_accumulate(const NetParams& params, const ForwardCache& cache, const Vec6& grad_out,
                         std::span<double> grad) {
    const Architecture& arch = params.arch;
    const Layout layout = make_layout(arch);
    if (grad.size() != layout.total || params.theta.size() != layout.total) {
        throw InvalidArgument("gradient buffer has wrong length");
    }
    if (cache.conv_out.size() != layout.convs.size() || cache.hidden_out.size() != arch.hidden.size()) {
        throw InvalidArgument("forward cache does not match architecture");
    }
    const double* theta = params.theta.data();
    double* gtheta = grad.data();

    Vec6 g_head = grad_out;
    for (int i : kDiagonal) g_head[i] *= cache.descriptor.a[i];

    // Dense layers, head first.
    Eigen::VectorXd g = g_head;
    for (std::size_t li = layout.dense.size(); li-- > 0;) {
        const DenseGeom& d = layout.dense[li];
        const std::vector<double>& xin_vec =
            li > 0 ? cache.hidden_out[li - 1]
                   : (layout.convs.empty() ? cache.input : cache.conv_out.back());
        Eigen::Map<const Eigen::VectorXd> xin(xin_vec.data(), d.in);
        Eigen::Map<RowMajorMat> dW(gtheta + d.w_off, d.out, d.in);
        Eigen::Map<Eigen::VectorXd> db(gtheta + d.b_off, d.out);
        dW.noalias() += g * xin.transpose();
        db += g;
        if (li == 0 && layout.convs.empty()) break;
        Eigen::VectorXd gin = dense_weights(d, theta).transpose() * g;
        for (int i = 0; i < d.in; ++i) {
            if (!(xin_vec[i] > 0.0)) gin[i] = 0.0;
        }
        g = std::move(gin);
    }
    if (layout.convs.empty()) return;

    // The ReLU mask of the last conv output was applied above; conv_backward
    // reapplies it, which is harmless.
    std::vector<double> gconv(g.data(), g.data() + g.size());
    for (std::size_t ci = layout.convs.size(); ci-- > 0;) {
        const std::vector<double>& in = ci > 0 ? cache.conv_out[ci - 1] : cache.input;
        std::vector<double> gin;
        conv_backward(layout.convs[ci], theta, in, cache.conv_out[ci], gconv, gtheta,
                      ci > 0 ? &gin : nullptr);
        gconv = std::move(gin);
    }
}

std::vector<double> backward(const NetParams& params, const ForwardCache& cache, const Vec6& grad_out) {
    std::vector<double> grad(params.theta.size(), 0.0);
    backward_accumulate(params, cache, grad_out, grad);
    return grad;
}

}  // namespace sceneloc
