#include <cmath>
#include <set>
#include <stdexcept>

#include "doctest.h"
#include "qpinn/optimize.hpp"
#include "qpinn/problems.hpp"

using namespace qpinn;
using ad::Mat;
using ad::Tensor;

namespace {

double max_abs(const std::vector<Tensor>& rs) {
    double m = 0.0;
    for (const auto& r : rs) m = std::max(m, r.value().cwiseAbs().maxCoeff());
    return m;
}

Model constant_model(double c) {
    return [c](const Tensor& X) { return 0.0 * col(X, 0) + c; };
}

ProblemSpec tiny_fredholm() {
    ProblemSpec s;
    s.id = "tiny";
    s.domain = {{0.0, 1.0}};
    s.n = 8;
    s.unknowns = {{"u", {}}};
    OperatorTerm t;
    t.k1 = [](double x, double r) { return std::sin(3 * x + r); };
    s.terms = {t};
    Equation e;
    e.source = constant_model(0.0);
    e.terms = {{0, 1.0, -1}};
    s.equations = {e};
    return s;
}

}  // namespace

TEST_CASE("registry: every exact solution zeroes its residual") {
    int checked = 0;
    for (const auto& spec : suite_registry()) {
        if (!spec.has_exact()) continue;
        Session s(spec);
        const double r = max_abs(s.residuals(s.exact_models(), s.truth_params()));
        INFO(spec.id << " max|R| = " << r);
        CHECK(r <= spec.residual_tol);
        if (spec.residual_tol <= 1e-6 && spec.params.empty()) {
            const LossParts lp = s.loss(s.exact_models(), s.truth_params());
            CHECK(lp.condition_sum < 1e-20);
        }
        ++checked;
    }
    CHECK(checked >= 50);
}

TEST_CASE("residual: t3r1 at n=20") {
    SessionOptions o;
    o.n = 20;
    Session s(find_suite("t3r1"), o);
    CHECK(max_abs(s.residuals(s.exact_models(), {})) < 1e-8);
    CHECK(s.loss(s.exact_models(), {}).loss.item() < 1e-15);
}

TEST_CASE("residual: trivial cases") {
    Session s(tiny_fredholm());
    CHECK(max_abs(s.residuals({constant_model(0.0)}, {})) == 0.0);

    for (double a : {1.0, 0.5}) {
        Session p(population_spec(0.3, a));
        CHECK(max_abs(p.residuals({constant_model(0.0)}, {})) == 0.0);
    }
}

TEST_CASE("loss: condition penalty and plain residual mean") {
    ProblemSpec spec = tiny_fredholm();
    spec.terms[0].k1 = [](double, double) { return 0.0; };
    spec.equations[0].source = constant_model(1.1);
    Condition c;
    c.points = Mat::Zero(1, 1);
    c.values = Eigen::VectorXd::Constant(1, 1.0);
    spec.conditions = {c};
    Session s(spec);
    CHECK(s.loss({constant_model(1.1)}, {}).loss.item() == doctest::Approx(0.01).epsilon(1e-12));

    // With the penalty weight at zero the loss is the mean squared residual.
    spec.conditions[0].weight = 0.0;
    Session z(spec);
    const auto models = z.network_models();
    const auto res = z.residuals(models, {});
    const double mse = res[0].value().squaredNorm() / res[0].rows();
    CHECK(z.loss(models, {}).loss.item() == doctest::Approx(mse).epsilon(1e-14));
}

TEST_CASE("loss: systems average over every equation") {
    Session s(find_suite("t8r2"));
    const auto models = s.network_models();
    const auto res = s.residuals(models, {});
    REQUIRE(res.size() == 2);
    const double expect = (res[0].value().squaredNorm() + res[1].value().squaredNorm()) / (2.0 * s.n_points());
    const LossParts lp = s.loss(models, {});
    CHECK(lp.residual_mse == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("optimal control: cost of the exact pairs") {
    for (auto [id, j] : {std::pair{"oc-ex1", 0.328259}, {"oc-ex2", 0.192909}, {"oc-ex5", 0.380797077}}) {
        Session s(find_suite(id));
        const LossParts lp = s.loss(s.exact_models(), {});
        INFO(id << " J = " << lp.j);
        CHECK(std::abs(lp.j - j) < 1e-6);
        CHECK(lp.residual_mse + lp.condition_sum < 1e-10);
        CHECK(lp.loss.item() == doctest::Approx(lp.j).epsilon(1e-9));
    }
    for (const char* id : {"oc-ex3", "oc-ex6", "oc-ex7"}) {
        Session s(find_suite(id));
        CHECK(std::abs(s.loss(s.exact_models(), {}).j) < 1e-12);
    }
}

TEST_CASE("optimal control: zero running cost with a consistent constraint") {
    ProblemSpec spec = find_suite("oc-ex1");
    spec.control->running_cost = [](Fields& f) { return 0.0 * f.u(0); };
    Session s(spec);
    CHECK(std::abs(s.loss(s.exact_models(), {}).loss.item()) < 1e-10);
}

TEST_CASE("optimal control: invalid gamma") {
    ProblemSpec spec = find_suite("oc-ex1");
    spec.control->gamma = 0.0;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec.control->gamma = -1.0;
    CHECK_THROWS_AS(Session{spec}, std::invalid_argument);
}

TEST_CASE("delay: history before the start, network after") {
    const ProblemSpec spec = find_suite("oc-ex4");
    REQUIRE(spec.control->history);
    CHECK(spec.control->history_domain.a == -1.0);
    CHECK(spec.control->history_domain.b == 0.0);
    CHECK(spec.control->history(-0.5) == 1.0);

    Session s(spec);
    double lowest = INFINITY;
    Model chi = [&lowest](const Tensor& X) {
        lowest = std::min(lowest, X.value().minCoeff());
        return 2.0 * col(X, 0) + 5.0;
    };
    std::vector<Model> models{chi, constant_model(0.0)};
    Fields f(s, models, {});
    const Mat v = f.delayed(0, 1.0).value();
    const Mat& X = s.X();
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const double t = X(i, 0);
        if (t < 1.0)
            CHECK(v(i, 0) == 1.0);
        else
            CHECK(v(i, 0) == doctest::Approx(2.0 * (t - 1.0) + 5.0).epsilon(1e-15));
    }
    CHECK(lowest >= 0.0);
}

TEST_CASE("systems: permuting equations and networks keeps the loss") {
    for (const char* id : {"t8r1", "t8r2", "t8r4", "t8r5"}) {
        const ProblemSpec spec = find_suite(id);
        Session a(spec);
        Session b(permute_unknowns(spec, {1, 0}));
        b.nets()[1].set_flat(a.nets()[0].flat());
        b.nets()[0].set_flat(a.nets()[1].flat());
        const double la = a.loss(a.network_models(), {}).loss.item();
        const double lb = b.loss(b.network_models(), {}).loss.item();
        INFO(id);
        CHECK(std::abs(la - lb) <= 1e-14 * std::max(1.0, std::abs(la)));
    }
}

TEST_CASE("registry: contents") {
    int t3 = 0;
    std::set<std::string> ids;
    for (const auto& s : suite_registry()) {
        CHECK(ids.insert(s.id).second);
        if (s.id.rfind("t3r", 0) == 0) ++t3;
        CHECK_NOTHROW(s.validate());
    }
    CHECK(t3 == 13);
    for (const char* id : {"t4r1", "t4r10", "t5r7", "t7r2", "t8r5", "ex4", "inv-ex5", "inv-frac", "pop-k0.1-a1",
                           "pop-k0.7-a0.5", "oc-ex1", "oc-ex7", "demo-vide"})
        CHECK(ids.count(id) == 1);

    const ProblemSpec& abel = find_suite("t3r11");
    CHECK(abel.equations[0].kappa == 0.0);
    CHECK(abel.terms[0].k1(0.75, 0.5) == doctest::Approx(-2.0));
    CHECK_THROWS_AS(find_suite("nosuch"), std::out_of_range);
}

TEST_CASE("validation: spec invariants") {
    ProblemSpec s = tiny_fredholm();
    CHECK_NOTHROW(s.validate());

    ProblemSpec first = s;
    first.equations[0].kappa = 0.0;
    first.equations[0].terms.clear();
    CHECK_THROWS_AS(first.validate(), std::invalid_argument);

    ProblemSpec frac = s;
    frac.equations[0].derivative = Derivative::fractional(1.0);
    CHECK_THROWS_AS(frac.validate(), std::invalid_argument);
    frac.equations[0].derivative = Derivative::fractional(0.5);
    CHECK_NOTHROW(frac.validate());
    frac.domain = {{0.0, 1.0}, {0.0, 1.0}};
    CHECK_THROWS_AS(frac.validate(), std::invalid_argument);

    ProblemSpec out = s;
    Condition c;
    c.points = Mat::Constant(1, 1, 1.5);
    c.values = Eigen::VectorXd::Zero(1);
    out.conditions = {c};
    CHECK_THROWS_AS(out.validate(), std::invalid_argument);

    ProblemSpec dup = s;
    dup.params = {{"kappa", false, 0.0, kNaN, {}}, {"kappa", false, 1.0, kNaN, {}}};
    CHECK_THROWS_AS(dup.validate(), std::invalid_argument);

    ProblemSpec inf = s;
    inf.terms[0].box = {{0.0, INFINITY}};
    CHECK_THROWS_AS(Session{inf}, std::invalid_argument);
}

TEST_CASE("inverse: parameters follow the network parameters") {
    Session s(find_suite("inv-ex5"));
    std::size_t net = 0;
    for (const auto& m : s.nets()) net += m.parameter_count();
    Eigen::VectorXd th = s.flat();
    REQUIRE(static_cast<std::size_t>(th.size()) == net + 1);
    th[th.size() - 1] = 0.25;
    s.set_flat(th);
    CHECK(s.params()[0].item() == 0.25);

    // Truth baked into the source: the exact pair zeroes the loss.
    const LossParts lp = s.loss(s.exact_models(), s.truth_params());
    CHECK(lp.loss.item() < 1e-20);

    // No trainable extras: identical to forward mode.
    ProblemSpec fwd = find_suite("inv-ex5");
    fwd.params.clear();
    fwd.equations[0].terms[0].param = -1;
    fwd.equations[0].source = [](const Tensor& X) {
        const Tensor x = col(X, 0);
        return x * x * x + x - (3.0 * std::exp(2.0) / 8.0 + 5.0 / 8.0);
    };
    Session f(fwd);
    CHECK(f.flat().size() == static_cast<Eigen::Index>(net));
    CHECK(max_abs(f.residuals(f.exact_models(), {})) < 1e-12);
}

TEST_CASE("inverse: fractional problem declares a per-node kappa") {
    const ProblemSpec& spec = find_suite("inv-frac");
    REQUIRE(spec.params.size() == 1);
    CHECK(spec.params[0].per_node);
    CHECK(spec.params[0].init == 0.0);
    CHECK(spec.conditions[0].kind == "data");
    CHECK(spec.conditions[0].points.rows() == 50);
    Session s(spec);
    CHECK(s.params()[0].rows() == s.n_points());
}

TEST_CASE("mae: worked values and errors") {
    const std::vector<double> a{1.0, 2.0}, b{1.1, 1.9}, c{3.0, 4.0};
    CHECK(mae(a, a) == 0.0);
    CHECK(mae(a, b) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(mae(a, c) == doctest::Approx(2.0));
    CHECK_THROWS_AS(mae(std::vector<double>{}, std::vector<double>{}), std::invalid_argument);
    CHECK_THROWS_AS(mae(a, std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("session: test grid and metrics layout") {
    Session s(find_suite("t7r1"));
    const Mat G = s.test_grid();
    CHECK(G.rows() == 15 * 15);
    CHECK(G.col(1).maxCoeff() == 2.0);
    Session one(find_suite("t3r13"));
    CHECK(one.test_grid().rows() == 200);
    CHECK(one.test_grid().maxCoeff() == 10.0);

    Session oc(find_suite("oc-ex1"));
    const Metrics m = oc.metrics();
    std::set<std::string> keys;
    for (const auto& [k, v] : m) keys.insert(k);
    for (const char* k : {"mae_chi", "mae_u", "residual_mse", "residual_mae", "j"}) CHECK(keys.count(k) == 1);
}

TEST_CASE("solve: short run reports the config") {
    RunConfig cfg;
    cfg.lbfgs_epochs = 5;
    cfg.seed = 7;
    const RunReport r = solve(find_suite("t3r1"), cfg);
    CHECK(r.finite);
    CHECK(r.n_train == 30);
    CHECK(r.widths == std::vector<int>{1, 10, 10, 1});
    CHECK(r.lbfgs_epochs == 5);
    CHECK(r.seed == 7);
    CHECK(r.losses.size() == 6);
    CHECK(r.losses.back() < r.losses.front());
    REQUIRE(r.mae.has_value());
    CHECK_FALSE(r.j_value.has_value());

    const RunReport p = solve(find_suite("pop-k0.1-a1"), RunConfig{0, {10, 10}, 2, -1, 0});
    CHECK_FALSE(p.mae.has_value());
}

TEST_CASE("control: larger penalty weights tighten the delay constraint") {
    std::vector<double> res;
    for (double g : {10.0, 1e2, 1e3, 1e4}) {
        RunConfig cfg;
        cfg.gamma = g;
        const RunReport r = solve(find_suite("oc-ex4"), cfg);
        REQUIRE(r.finite);
        for (const auto& [k, v] : r.metrics)
            if (k == "residual_mse") res.push_back(v);
    }
    REQUIRE(res.size() == 4);
    int ordered = 0;
    for (int i = 0; i + 1 < 4; ++i) ordered += res[i + 1] <= res[i];
    CHECK(ordered >= 2);
    CHECK(res.back() < res.front());
}

TEST_CASE("inverse: fractional problem fits physics and data during Adam") {
    Session s(find_suite("inv-frac"));
    opt::AdamState st;
    st.lr = s.spec().schedule.adam_lr;
    Eigen::VectorXd theta = s.flat(), g;
    std::vector<double> res, data;
    for (int e = 0; e <= 400; ++e) {
        if (e % 100 == 0) {
            s.set_flat(theta);
            const LossParts lp = s.loss(s.network_models(), s.param_values());
            res.push_back(lp.residual_mse);
            data.push_back(lp.condition_sum);
        }
        s.loss_and_grad(theta, g);
        theta = opt::adam_step(st, theta, g);
    }
    // Adam oscillates between single steps; the trend is checked every 100 steps.
    for (std::size_t i = 1; i < res.size(); ++i) {
        CHECK(res[i] < res[i - 1]);
        CHECK(data[i] < data[i - 1]);
    }
}
