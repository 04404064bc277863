#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "qpinn/autodiff.hpp"

namespace qpinn {

enum class Activation : std::uint32_t { tanh = 0, identity = 1 };

// Fully connected network. Layer i maps h_{i-1} -> h_i with weights
// theta (h_{i-1} x h_i) and bias (1 x h_i); the last layer is affine.
class Mlp {
public:
    Mlp() = default;
    Mlp(std::vector<int> widths, Activation act, std::uint64_t seed);

    const std::vector<int>& widths() const { return widths_; }
    Activation activation() const { return act_; }
    std::uint64_t seed() const { return seed_; }
    int input_dim() const { return widths_.front(); }
    int output_dim() const { return widths_.back(); }
    std::size_t parameter_count() const;

    ad::Tensor& weight(std::size_t layer) { return weights_.at(layer); }
    ad::Tensor& bias(std::size_t layer) { return biases_.at(layer); }
    std::size_t layers() const { return weights_.size(); }

    // Parameter leaves in canonical order: layer by layer, weights (row-major)
    // before biases.
    std::vector<ad::Tensor> parameters() const;
    Eigen::VectorXd flat() const;
    void set_flat(const Eigen::VectorXd& theta);

    ad::Tensor forward(const ad::Tensor& X) const;
    // Plain evaluation without recording.
    ad::Mat predict(const ad::Mat& X) const;

    // d^order u_out / dx_axis^order at every row of X, differentiable with
    // respect to the parameters.
    ad::Tensor input_derivative(const ad::Tensor& X, int order, int axis, int out = 0) const;

    // Binary layout, little-endian:
    //   "QMLP" | u32 version=1 | u32 L | u32 widths[L] | u32 activation | u64 seed
    //   | u64 count | f64 params[count]
    void save(std::ostream& os) const;
    static Mlp load(std::istream& is);

private:
    std::vector<int> widths_;
    Activation act_ = Activation::tanh;
    std::uint64_t seed_ = 0;
    std::vector<ad::Tensor> weights_;
    std::vector<ad::Tensor> biases_;
};

// Helpers shared by networks and extra trainable tensors.
std::size_t flat_size(const std::vector<ad::Tensor>& params);
Eigen::VectorXd flatten(const std::vector<ad::Tensor>& params);
void unflatten(const Eigen::VectorXd& theta, std::vector<ad::Tensor>& params);
// Gradient of a scalar loss with respect to params, flattened in the same order.
Eigen::VectorXd flat_gradient(const ad::Tensor& loss, const std::vector<ad::Tensor>& params);

}  // namespace qpinn
