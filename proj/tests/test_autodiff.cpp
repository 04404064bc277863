#include <cmath>
#include <functional>

#include "doctest.h"
#include "oracles.hpp"
#include "qpinn/autodiff.hpp"

using namespace qpinn;
using ad::Mat;
using ad::Tensor;

namespace {

using Fn = std::function<Tensor(const Tensor&)>;

std::vector<double> to_std(const Mat& m) {
    std::vector<double> v(m.size());
    for (Eigen::Index i = 0; i < m.size(); ++i) v[i] = m.data()[i];
    return v;
}

Mat from_std(const std::vector<double>& v, Eigen::Index r, Eigen::Index c) {
    Mat m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = v[i];
    return m;
}

// Max relative error of the tape gradient of sum(f(x)) against central differences.
double check_grad(const Fn& f, const Mat& x0) {
    Tensor x = ad::leaf(x0);
    Tensor y = ad::sum(f(x));
    Mat g = ad::grad({y}, {x})[0].value();
    auto scalar = [&](const std::vector<double>& v) {
        ad::NoGrad ng;
        return ad::sum(f(ad::constant(from_std(v, x0.rows(), x0.cols())))).item();
    };
    auto fd = oracle::fd_gradient(scalar, to_std(x0), 1e-5);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < g.size(); ++i)
        worst = std::max(worst, std::abs(g.data()[i] - fd[i]) / std::max(1.0, std::abs(fd[i])));
    return worst;
}

Mat sample(Eigen::Index r, Eigen::Index c, double lo, double hi, unsigned seed) {
    Mat m(r, c);
    double s = seed * 0.618;
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        s = std::fmod(s * 9.7 + 0.31, 1.0);
        m.data()[i] = lo + (hi - lo) * s;
    }
    return m;
}

}  // namespace

TEST_CASE("elementwise ops match finite differences") {
    const Mat x = sample(3, 4, 0.2, 1.8, 1);
    const Mat c = sample(3, 4, -1.0, 1.0, 2);
    const Tensor C = ad::constant(c);
    CHECK(check_grad([](const Tensor& t) { return ad::tanh(t); }, x) < 1e-8);
    CHECK(check_grad([](const Tensor& t) { return ad::exp(t); }, x) < 1e-8);
    CHECK(check_grad([](const Tensor& t) { return ad::log(t); }, x) < 1e-8);
    CHECK(check_grad([](const Tensor& t) { return ad::sin(t); }, x) < 1e-8);
    CHECK(check_grad([](const Tensor& t) { return ad::cos(t); }, x) < 1e-8);
    CHECK(check_grad([](const Tensor& t) { return ad::sqrt(t); }, x) < 1e-8);
    CHECK(check_grad([](const Tensor& t) { return ad::square(t); }, x) < 1e-8);
    CHECK(check_grad([](const Tensor& t) { return ad::pow(t, 3.5); }, x) < 1e-8);
    CHECK(check_grad([&](const Tensor& t) { return t * C + t / (C + 3.0) - 2.0 * t; }, x) < 1e-8);
    CHECK(check_grad([&](const Tensor& t) { return C / t - t; }, x) < 1e-8);
    CHECK(check_grad([](const Tensor& t) { return ad::mul(t, t) - ad::neg(t) + (1.0 - t); }, x) < 1e-8);
}

TEST_CASE("matrix and shape ops match finite differences") {
    const Mat x = sample(4, 3, -1.0, 1.0, 3);
    const Tensor B = ad::constant(sample(3, 5, -1.0, 1.0, 4));
    const Tensor A = ad::constant(sample(2, 4, -1.0, 1.0, 5));
    CHECK(check_grad([&](const Tensor& t) { return ad::tanh(ad::matmul(t, B)); }, x) < 1e-8);
    CHECK(check_grad([&](const Tensor& t) { return ad::square(ad::matmul(A, t)); }, x) < 1e-8);
    CHECK(check_grad([](const Tensor& t) { return ad::square(ad::transpose(t)); }, x) < 1e-8);
    CHECK(check_grad([](const Tensor& t) { return ad::square(ad::reshape(t, 2, 6)); }, x) < 1e-8);
    CHECK(check_grad([](const Tensor& t) { return ad::exp(ad::slice_cols(t, 1, 2)); }, x) < 1e-8);
    CHECK(check_grad([](const Tensor& t) { return ad::exp(ad::slice_rows(t, 2, 2)); }, x) < 1e-8);
    CHECK(check_grad([](const Tensor& t) { return ad::square(ad::gather_rows(t, {3, 0, 0, 2})); }, x) < 1e-8);
    CHECK(check_grad([](const Tensor& t) { return ad::square(ad::scatter_rows(t, {1, 1, 4, 0}, 6)); }, x) < 1e-8);
    CHECK(check_grad([](const Tensor& t) { return ad::square(ad::concat_cols({t, ad::sin(t)})); }, x) < 1e-8);
    CHECK(check_grad([](const Tensor& t) { return ad::square(ad::concat_rows({t, ad::cos(t)})); }, x) < 1e-8);
    CHECK(check_grad([](const Tensor& t) { return ad::square(ad::reduce_to(t, 4, 1)); }, x) < 1e-8);
    CHECK(check_grad([](const Tensor& t) { return ad::square(ad::reduce_to(t, 1, 3)); }, x) < 1e-8);
    CHECK(check_grad([](const Tensor& t) { return ad::square(ad::pad(t, 1, 2, 6, 7)); }, x) < 1e-8);
    CHECK(check_grad([](const Tensor& t) { return ad::square(ad::mean(t)); }, x) < 1e-8);
}

TEST_CASE("broadcasting against rows, columns and scalars") {
    const Mat x = sample(1, 3, -1.0, 1.0, 6);
    const Tensor M = ad::constant(sample(4, 3, -1.0, 1.0, 7));
    CHECK(check_grad([&](const Tensor& t) { return ad::square(M + t); }, x) < 1e-8);
    CHECK(check_grad([&](const Tensor& t) { return ad::square(t * M); }, x) < 1e-8);
    const Mat s = Mat::Constant(1, 1, 0.7);
    CHECK(check_grad([&](const Tensor& t) { return ad::square(M * t - t); }, s) < 1e-8);
    const Mat col = sample(4, 1, 0.5, 1.0, 8);
    CHECK(check_grad([&](const Tensor& t) { return M / t; }, col) < 1e-8);
    CHECK_THROWS_AS(ad::add(M, ad::constant(Mat::Ones(2, 3))), std::invalid_argument);
    CHECK_THROWS_AS(ad::matmul(M, M), std::invalid_argument);

    Tensor r = M + ad::constant(Mat::Constant(1, 3, 2.0));
    CHECK(r.rows() == 4);
    CHECK((r.value() - (M.value().array() + 2.0).matrix()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("reshape is row-major") {
    Mat v(6, 1);
    v << 1, 2, 3, 4, 5, 6;
    Tensor m = ad::reshape(ad::constant(v), 2, 3);
    CHECK(m.value()(0, 2) == 3.0);
    CHECK(m.value()(1, 0) == 4.0);
    Tensor back = ad::reshape(ad::reshape(m, 3, 2), 1, 6);
    CHECK(back.value()(0, 4) == 5.0);
    CHECK(ad::reshape(m, 3, 2).value()(2, 1) == 6.0);
}

TEST_CASE("second derivatives through the tape") {
    // f(x) = sin(x) * x^2; f'' = (2 - x^2) sin x + 4 x cos x
    Tensor x = ad::leaf(sample(5, 1, -2.0, 2.0, 9));
    Tensor y = ad::sin(x) * ad::square(x);
    Tensor d1 = ad::grad({y}, {x}, {}, true)[0];
    Tensor d2 = ad::grad({d1}, {x}, {}, true)[0];
    for (Eigen::Index i = 0; i < 5; ++i) {
        const double v = x.value()(i, 0);
        CHECK(d1.value()(i, 0) == doctest::Approx(std::cos(v) * v * v + 2 * v * std::sin(v)).epsilon(1e-13));
        CHECK(d2.value()(i, 0) == doctest::Approx((2 - v * v) * std::sin(v) + 4 * v * std::cos(v)).epsilon(1e-12));
    }
    // tanh'' = -2 tanh (1 - tanh^2)
    Tensor z = ad::leaf(sample(4, 1, -1.5, 1.5, 10));
    Tensor t2 = ad::grad({ad::grad({ad::tanh(z)}, {z}, {}, true)[0]}, {z})[0];
    for (Eigen::Index i = 0; i < 4; ++i) {
        const double th = std::tanh(z.value()(i, 0));
        CHECK(t2.value()(i, 0) == doctest::Approx(-2 * th * (1 - th * th)).epsilon(1e-13));
    }
}

TEST_CASE("mixed gradient: parameter gradient of an input derivative") {
    // y = tanh(w x); dy/dx = w (1 - tanh^2(wx)); d/dw of sum(dy/dx) checked by differences.
    const Mat xs = sample(6, 1, -1.0, 1.0, 11);
    auto loss_at = [&](double wv, bool tape) {
        Tensor w = ad::leaf(Mat::Constant(1, 1, wv));
        Tensor x = ad::leaf(xs);
        Tensor y = ad::tanh(ad::matmul(x, w));
        Tensor dydx = ad::grad({y}, {x}, {}, true)[0];
        Tensor L = ad::sum(ad::square(dydx));
        return tape ? ad::grad({L}, {w})[0].item() : L.item();
    };
    const double w0 = 0.8, h = 1e-6;
    const double fd = (loss_at(w0 + h, false) - loss_at(w0 - h, false)) / (2 * h);
    CHECK(loss_at(w0, true) == doctest::Approx(fd).epsilon(1e-7));
}

TEST_CASE("no-grad guard and gradient bookkeeping") {
    Tensor x = ad::leaf(Mat::Constant(2, 2, 1.5));
    {
        ad::NoGrad ng;
        CHECK_FALSE(ad::grad_enabled());
        Tensor y = ad::exp(x);
        CHECK_FALSE(y.requires_grad());
    }
    CHECK(ad::grad_enabled());
    Tensor y = ad::exp(x);
    CHECK(y.requires_grad());

    // Unused inputs get zeros; constants never require grad.
    Tensor unused = ad::leaf(Mat::Ones(3, 1));
    auto g = ad::grad({ad::sum(y)}, {x, unused});
    CHECK(g[1].value().cwiseAbs().maxCoeff() == 0.0);
    CHECK(g[0].value()(0, 0) == doctest::Approx(std::exp(1.5)));
    CHECK_FALSE(ad::constant(2.0).requires_grad());

    // A node reached twice accumulates both contributions.
    Tensor z = x * x + x;
    CHECK(ad::grad({ad::sum(z)}, {x})[0].value()(1, 1) == doctest::Approx(4.0));

    CHECK_THROWS_AS(ad::constant(Mat::Ones(2, 2)).item(), std::invalid_argument);
    CHECK_THROWS_AS(ad::exp(x).mutable_value(), std::logic_error);
}

TEST_CASE("derivative graphs outlive the forward graph") {
    Tensor x = ad::leaf(sample(3, 1, -1.0, 1.0, 12));
    Tensor d;
    {
        Tensor y = ad::tanh(ad::tanh(x));
        d = ad::grad({y}, {x}, {}, true)[0];
    }
    Tensor d2 = ad::grad({d}, {x})[0];
    for (Eigen::Index i = 0; i < 3; ++i) CHECK(std::isfinite(d2.value()(i, 0)));
}
