#include "qpinn/network.hpp"

#include <bit>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>

#include "qpinn/quadrature.hpp"

namespace qpinn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

static_assert(std::endian::native == std::endian::little, "parameter files assume a little-endian host");

template <class T>
void put(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& is) {
    T v{};
    if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw std::runtime_error("truncated parameter file");
    return v;
}

}  // namespace

Mlp::Mlp(std::vector<int> widths, Activation act, std::uint64_t seed)
    : widths_(std::move(widths)), act_(act), seed_(seed) {
    if (widths_.size() < 2) throw std::invalid_argument("Mlp needs at least two widths");
    for (int w : widths_)
        if (w <= 0) throw std::invalid_argument("Mlp widths must be positive");
    std::mt19937_64 gen(seed);
    for (std::size_t i = 1; i < widths_.size(); ++i) {
        const int fan_in = widths_[i - 1], fan_out = widths_[i];
        const double lim = std::sqrt(6.0 / (fan_in + fan_out));
        ad::Mat W(fan_in, fan_out);
        // Row-major fill so the draw order matches the flat layout.
        for (int r = 0; r < fan_in; ++r)
            for (int c = 0; c < fan_out; ++c) W(r, c) = lim * (2.0 * quadrature::uniform01(gen) - 1.0);
        weights_.push_back(ad::leaf(std::move(W)));
        biases_.push_back(ad::leaf(ad::Mat::Zero(1, fan_out)));
    }
}

std::size_t Mlp::parameter_count() const { return flat_size(parameters()); }

std::vector<ad::Tensor> Mlp::parameters() const {
    std::vector<ad::Tensor> p;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        p.push_back(weights_[i]);
        p.push_back(biases_[i]);
    }
    return p;
}

Eigen::VectorXd Mlp::flat() const { return flatten(parameters()); }

void Mlp::set_flat(const Eigen::VectorXd& theta) {
    auto p = parameters();
    unflatten(theta, p);
}

ad::Tensor Mlp::forward(const ad::Tensor& X) const {
    if (X.cols() != widths_.front())
        throw std::invalid_argument("Mlp::forward: input has " + std::to_string(X.cols()) + " columns, expected " +
                                    std::to_string(widths_.front()));
    ad::Tensor A = X;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        ad::Tensor Z = ad::add(ad::matmul(A, weights_[i]), biases_[i]);
        A = (i + 1 < weights_.size() && act_ == Activation::tanh) ? ad::tanh(Z) : Z;
    }
    return A;
}

ad::Mat Mlp::predict(const ad::Mat& X) const {
    if (X.cols() != widths_.front()) throw std::invalid_argument("Mlp::predict: input width mismatch");
    ad::Mat A = X;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        ad::Mat Z = A * weights_[i].value();
        Z.rowwise() += biases_[i].value().row(0);
        if (i + 1 < weights_.size() && act_ == Activation::tanh) Z = Z.array().tanh();
        A = std::move(Z);
    }
    return A;
}

ad::Tensor Mlp::input_derivative(const ad::Tensor& X, int order, int axis, int out) const {
    if (order < 1 || order > 2) throw std::invalid_argument("input_derivative supports orders 1 and 2");
    if (axis < 0 || axis >= widths_.front()) throw std::invalid_argument("input_derivative: axis out of range");
    if (out < 0 || out >= widths_.back()) throw std::invalid_argument("input_derivative: output out of range");
    ad::GradMode on(true);
    ad::Tensor Xg = X.requires_grad() ? X : ad::leaf(X.value(), true);
    ad::Tensor u = ad::slice_cols(forward(Xg), out, 1);
    ad::Tensor d = ad::slice_cols(ad::grad({u}, {Xg}, {}, true)[0], axis, 1);
    if (order == 2) d = ad::slice_cols(ad::grad({d}, {Xg}, {}, true)[0], axis, 1);
    return d;
}

void Mlp::save(std::ostream& os) const {
    os.write("QMLP", 4);
    put<std::uint32_t>(os, 1);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(widths_.size()));
    for (int w : widths_) put<std::uint32_t>(os, static_cast<std::uint32_t>(w));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(act_));
    put<std::uint64_t>(os, seed_);
    const Eigen::VectorXd theta = flat();
    put<std::uint64_t>(os, static_cast<std::uint64_t>(theta.size()));
    os.write(reinterpret_cast<const char*>(theta.data()), static_cast<std::streamsize>(theta.size() * sizeof(double)));
}

Mlp Mlp::load(std::istream& is) {
    char magic[4];
    if (!is.read(magic, 4) || std::string(magic, 4) != "QMLP") throw std::runtime_error("not a parameter file");
    if (get<std::uint32_t>(is) != 1) throw std::runtime_error("unsupported parameter file version");
    const auto L = get<std::uint32_t>(is);
    if (L < 2 || L > 1024) throw std::runtime_error("corrupt parameter file");
    std::vector<int> widths(L);
    for (auto& w : widths) w = static_cast<int>(get<std::uint32_t>(is));
    const auto act = get<std::uint32_t>(is);
    if (act > 1) throw std::runtime_error("unknown activation id in parameter file");
    const auto seed = get<std::uint64_t>(is);
    Mlp m(widths, static_cast<Activation>(act), seed);
    const auto count = get<std::uint64_t>(is);
    if (count != m.parameter_count()) throw std::runtime_error("parameter count does not match widths");
    Eigen::VectorXd theta(static_cast<Eigen::Index>(count));
    if (!is.read(reinterpret_cast<char*>(theta.data()), static_cast<std::streamsize>(count * sizeof(double))))
        throw std::runtime_error("truncated parameter file");
    m.set_flat(theta);
    return m;
}

std::size_t flat_size(const std::vector<ad::Tensor>& params) {
    std::size_t n = 0;
    for (const auto& p : params) n += static_cast<std::size_t>(p.value().size());
    return n;
}

Eigen::VectorXd flatten(const std::vector<ad::Tensor>& params) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(flat_size(params)));
    Eigen::Index o = 0;
    for (const auto& p : params) {
        const RowMat rm = p.value();
        v.segment(o, rm.size()) = Eigen::Map<const Eigen::VectorXd>(rm.data(), rm.size());
        o += rm.size();
    }
    return v;
}

void unflatten(const Eigen::VectorXd& theta, std::vector<ad::Tensor>& params) {
    if (static_cast<std::size_t>(theta.size()) != flat_size(params))
        throw std::invalid_argument("unflatten: parameter vector has the wrong length");
    Eigen::Index o = 0;
    for (auto& p : params) {
        ad::Mat& v = p.mutable_value();
        v = Eigen::Map<const RowMat>(theta.data() + o, v.rows(), v.cols());
        o += v.size();
    }
}

Eigen::VectorXd flat_gradient(const ad::Tensor& loss, const std::vector<ad::Tensor>& params) {
    if (loss.rows() != 1 || loss.cols() != 1) throw std::invalid_argument("flat_gradient: loss must be a scalar");
    if (!loss.requires_grad()) throw std::invalid_argument("flat_gradient: loss is not on the tape");
    auto g = ad::grad({loss}, params);
    return flatten(g);
}

}  // namespace qpinn
