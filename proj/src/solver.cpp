#include <algorithm>
#include <chrono>
#include <cmath>

#include "qpinn/problems.hpp"

namespace qpinn {

using ad::Mat;
using Eigen::VectorXd;

Metrics Session::metrics() {
    Metrics m;
    for (const auto& [name, v] : errors()) m.emplace_back("mae_" + name, v);

    const auto models = network_models();
    for (std::size_t i = 0; i < spec_.params.size(); ++i) {
        const auto& p = spec_.params[i];
        const Mat& v = params_[i].value();
        if (!p.per_node) {
            m.emplace_back(p.name, v(0, 0));
            continue;
        }
        if (!p.truth_fn) continue;
        double s = 0.0;
        for (Eigen::Index r = 0; r < v.rows(); ++r) s += std::abs(v(r, 0) - p.truth_fn(X()(r, 0)));
        m.emplace_back(p.name + "_mae", s / static_cast<double>(v.rows()));
    }

    LossParts lp = loss(models, params_);
    double abs_sum = 0.0;
    Eigen::Index rows = 0;
    for (const auto& r : residuals(models, params_)) {
        abs_sum += r.value().cwiseAbs().sum();
        rows += r.rows();
    }
    m.emplace_back("residual_mse", lp.residual_mse);
    m.emplace_back("residual_mae", abs_sum / static_cast<double>(std::max<Eigen::Index>(rows, 1)));
    m.emplace_back("condition_sum", lp.condition_sum);
    if (spec_.control) m.emplace_back("j", lp.j);
    if (spec_.post) spec_.post(*this, m);
    return m;
}

RunReport solve(const ProblemSpec& spec, const RunConfig& cfg,
                const std::function<void(const std::string&, int, double)>& on_epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    SessionOptions so;
    so.n = cfg.n;
    so.hidden = cfg.hidden;
    so.seed = cfg.seed;
    so.gamma = cfg.gamma;
    if (!cfg.quad.empty()) so.quad = quadrature::parse_family(cfg.quad);
    Session session(spec, so);

    opt::Schedule sched = spec.schedule;
    if (cfg.adam_epochs >= 0) sched.adam_epochs = cfg.adam_epochs;
    if (cfg.adam_lr > 0) sched.adam_lr = cfg.adam_lr;
    if (cfg.lbfgs_epochs >= 0) sched.lbfgs_epochs = cfg.lbfgs_epochs;
    if (cfg.lr > 0) sched.lbfgs_lr = cfg.lr;

    RunReport rep;
    rep.suite_id = spec.id;
    rep.n_train = session.spec().n;
    rep.widths.push_back(spec.dim());
    for (int h : cfg.hidden) rep.widths.push_back(h);
    rep.widths.push_back(1);
    rep.adam_epochs = sched.adam_epochs;
    rep.lbfgs_epochs = sched.lbfgs_epochs;
    rep.lr = sched.lbfgs_lr;
    rep.seed = cfg.seed;
    rep.quad = cfg.quad.empty() ? "default" : cfg.quad;

    auto f = [&session](const VectorXd& theta, VectorXd& g) { return session.loss_and_grad(theta, g); };
    opt::TrainReport tr = opt::train(f, session.flat(), sched, on_epoch);
    session.set_flat(tr.theta);
    rep.losses = tr.losses;
    rep.final_loss = tr.final_loss;
    rep.finite = tr.finite;
    rep.message = tr.message;

    if (rep.finite) {
        rep.metrics = session.metrics();
        if (spec.has_exact()) {
            double worst = 0.0;
            for (const auto& [k, v] : rep.metrics)
                if (k.rfind("mae_", 0) == 0) worst = std::max(worst, v);
            rep.mae = worst;
        }
        if (spec.control)
            for (const auto& [k, v] : rep.metrics)
                if (k == "j") rep.j_value = v;
    } else {
        rep.final_loss = kNaN;
    }
    rep.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

}  // namespace qpinn
