#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "sceneloc/scene_grid.hpp"

namespace sceneloc {

struct ConvLayerSpec {
    int out_channels = 0;
    int kernel = 0;
    int stride = 1;

    friend bool operator==(const ConvLayerSpec&, const ConvLayerSpec&) = default;
};

/// Convolution stack (no padding, ReLU) followed by dense ReLU layers and a
/// linear 6-output head. The head's diagonal outputs pass through exp so
/// the descriptor is always a valid Cholesky factor.
struct Architecture {
    static constexpr int kOutputs = 6;

    int in_height = 50;
    int in_width = 50;
    std::vector<ConvLayerSpec> convs{{8, 5, 2}, {16, 3, 2}};
    std::vector<int> hidden{64};

    /// Single linear layer from the flattened grid to the head.
    static Architecture linear(int in_height, int in_width);

    /// Throws InvalidArgument on non-positive sizes or a conv stack that
    /// shrinks the image below one pixel.
    void validate() const;
    std::size_t parameter_count() const;

    friend bool operator==(const Architecture&, const Architecture&) = default;
};

struct NetParams {
    Architecture arch;
    std::vector<double> theta;
};

struct NetInit {
    /// Nominal exteroceptive standard deviations the untrained head maps to:
    /// Q = diag(1/sxy^2, 1/sxy^2, 1/stheta^2).
    double sigma_xy = 0.05;
    double sigma_theta = 0.005;
    /// He-normal scale multiplier for the head weights; 0 gives a head that
    /// ignores its input.
    double head_weight_scale = 0.0;
    std::uint64_t seed = 1;
};

NetParams init_params(const Architecture& arch, const NetInit& init = {});

/// Head bias reproducing the nominal information matrix of `init`.
Eigen::Matrix<double, 6, 1> nominal_head_bias(const NetInit& init);

/// Activations retained by forward for the matching backward pass.
struct ForwardCache {
    std::vector<double> input;
    std::vector<std::vector<double>> conv_out;    ///< post-ReLU, per conv layer
    std::vector<std::vector<double>> hidden_out;  ///< post-ReLU, per dense layer
    Eigen::Matrix<double, 6, 1> head = Eigen::Matrix<double, 6, 1>::Zero();
    InfoDescriptor descriptor;
};

struct ForwardResult {
    InfoDescriptor descriptor;
    ForwardCache cache;
};

/// Throws InvalidArgument on a grid/architecture size mismatch and
/// NumericalError on non-finite activations.
ForwardResult forward(const NetParams& params, const SceneGrid& grid);
InfoDescriptor predict_descriptor(const NetParams& params, const SceneGrid& grid);
InfoMatrix predict_information(const NetParams& params, const SceneGrid& grid);

/// Gradient of dot(descriptor, grad_out) with respect to theta.
std::vector<double> backward(const NetParams& params, const ForwardCache& cache,
                             const Eigen::Matrix<double, 6, 1>& grad_out);

/// Adds the gradient into `grad` (size parameter_count()).
void backward_accumulate(const NetParams& params, const ForwardCache& cache,
                         const Eigen::Matrix<double, 6, 1>& grad_out, std::span<double> grad);

}  // namespace sceneloc
