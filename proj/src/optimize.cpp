#include "qpinn/optimize.hpp"

#include <chrono>
#include <limits>
#include <cmath>
#include <sstream>

namespace qpinn::opt {

namespace {

bool finite(const Vec& v) { return v.allFinite(); }

double evaluate(const LossFn& f, const Vec& theta, Vec& g) {
    g.resize(theta.size());
    const double v = f(theta, g);
    if (!std::isfinite(v) || !finite(g)) {
        std::ostringstream msg;
        msg << "non-finite loss or gradient (loss = " << v << ")";
        throw NonFiniteError(msg.str());
    }
    return v;
}

}  // namespace

Vec adam_step(AdamState& s, const Vec& theta, const Vec& grad) {
    if (grad.size() != theta.size()) throw std::invalid_argument("adam_step: gradient length mismatch");
    if (!finite(grad)) throw NonFiniteError("adam_step: non-finite gradient");
    if (s.m.size() != theta.size()) {
        s.m = Vec::Zero(theta.size());
        s.v = Vec::Zero(theta.size());
        s.step = 0;
    }
    ++s.step;
    s.m = s.beta1 * s.m + (1.0 - s.beta1) * grad;
    s.v = s.beta2 * s.v + (1.0 - s.beta2) * grad.cwiseAbs2();
    const double bc1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
    const double bc2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
    const Vec mhat = s.m / bc1;
    const Vec vhat = s.v / bc2;
    return theta - s.lr * (mhat.array() / (vhat.array().sqrt() + s.eps)).matrix();
}

Vec lbfgs_direction(const LbfgsState& s, const Vec& g) {
    const std::size_t k = s.s.size();
    Vec q = g;
    std::vector<double> alpha(k), rho(k);
    for (std::size_t i = k; i-- > 0;) {
        rho[i] = 1.0 / s.y[i].dot(s.s[i]);
        alpha[i] = rho[i] * s.s[i].dot(q);
        q -= alpha[i] * s.y[i];
    }
    const double gamma = k ? s.s.back().dot(s.y.back()) / s.y.back().squaredNorm() : 1.0;
    Vec r = gamma * q;
    for (std::size_t i = 0; i < k; ++i) {
        const double beta = rho[i] * s.y[i].dot(r);
        r += (alpha[i] - beta) * s.s[i];
    }
    return -r;
}

LbfgsStep lbfgs_step(LbfgsState& s, const Vec& theta, const LossFn& f) {
    LbfgsStep out;
    if (!s.have_eval || s.g.size() != theta.size()) {
        s.f = evaluate(f, theta, s.g);
        s.have_eval = true;
        ++out.evaluations;
    }
    ++s.iteration;
    out.theta = theta;
    out.loss = s.f;
    if (s.g.squaredNorm() == 0.0) {
        out.accepted = true;
        return out;
    }

    Vec p = lbfgs_direction(s, s.g);
    double dg = s.g.dot(p);
    if (!(dg < 0.0)) {
        s.s.clear();
        s.y.clear();
        p = -s.g;
        dg = -s.g.squaredNorm();
    }
    double t = s.s.empty() ? s.first_step * std::min(1.0, 1.0 / s.g.lpNorm<1>()) : 1.0;

    Vec g_new(theta.size());
    for (int trial = 0; trial < s.max_trials; ++trial, t *= s.shrink) {
        const Vec x_new = theta + t * p;
        const double f_new = f(x_new, g_new);
        ++out.evaluations;
        if (!std::isfinite(f_new) || !finite(g_new)) continue;
        if (f_new <= s.f + s.c1 * t * dg) {
            const Vec sv = x_new - theta;
            const Vec yv = g_new - s.g;
            // Relative test: an absolute threshold freezes the history once
            // gradients get small, which stalls the late phase of training.
            if (sv.dot(yv) > s.curvature_eps * sv.norm() * yv.norm()) {
                s.s.push_back(sv);
                s.y.push_back(yv);
                while (static_cast<int>(s.s.size()) > s.history) {
                    s.s.pop_front();
                    s.y.pop_front();
                }
            }
            s.f = f_new;
            s.g = g_new;
            out.theta = x_new;
            out.loss = f_new;
            out.accepted = true;
            return out;
        }
    }
    s.s.clear();
    s.y.clear();
    return out;
}

TrainReport train(const LossFn& f, const Vec& theta0, const Schedule& sched,
                  const std::function<void(const std::string&, int, double)>& on_epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    TrainReport rep;
    rep.theta = theta0;
    Vec g;
    double loss = 0.0;
    auto finish = [&] {
        rep.final_loss = loss;
        rep.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        return rep;
    };

    try {
        loss = evaluate(f, rep.theta, g);
        ++rep.evaluations;
        rep.losses.push_back(loss);

        AdamState adam;
        adam.lr = sched.adam_lr;
        for (int e = 0; e < sched.adam_epochs && loss >= 1e-14; ++e) {
            rep.theta = adam_step(adam, rep.theta, g);
            loss = evaluate(f, rep.theta, g);
            ++rep.evaluations;
            rep.losses.push_back(loss);
            if (on_epoch) on_epoch("adam", e, loss);
        }

        LbfgsState lb;
        lb.history = sched.history;
        lb.first_step = sched.lbfgs_lr;
        lb.have_eval = true;
        lb.f = loss;
        lb.g = g;
        int failures = 0;
        bool stop = loss < 1e-14;
        for (int e = 0; e < sched.lbfgs_epochs && !stop; ++e) {
            for (int it = 0; it < sched.lbfgs_iters; ++it) {
                LbfgsStep st = lbfgs_step(lb, rep.theta, f);
                rep.evaluations += st.evaluations;
                rep.theta = st.theta;
                loss = st.loss;
                failures = st.accepted ? 0 : failures + 1;
                if (failures >= 3) {
                    rep.message = "line search failed three times in a row";
                    stop = true;
                } else if (loss < 1e-14) {
                    stop = true;
                }
                if (stop) break;
            }
            rep.losses.push_back(loss);
            if (on_epoch) on_epoch("lbfgs", e, loss);
        }
    } catch (const NonFiniteError& err) {
        rep.finite = false;
        rep.message = err.what();
        loss = std::numeric_limits<double>::quiet_NaN();
    }
    return finish();
}

}  // namespace qpinn::opt
