#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <tuple>
#include <string>
#include <utility>
#include <vector>

#include "qpinn/autodiff.hpp"
#include "qpinn/integral_ops.hpp"
#include "qpinn/network.hpp"
#include "qpinn/optimize.hpp"
#include "qpinn/quadrature.hpp"

namespace qpinn {

using ad::Tensor;
// A function of the N x d coordinate matrix returning N x 1 values. Networks
// and closed-form solutions share this shape, so an exact solution can stand
// in for a network anywhere a residual is built.
using Model = std::function<Tensor(const Tensor& X)>;
using Zeta = std::function<Tensor(const Tensor& u)>;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Interval {
    double a = 0.0;
    double b = 1.0;
};

enum class TermKind {
    fredholm,
    volterra,
    fredholm2d,
    volterra2d,
    fredholm3d,
    // 1-D operators in the last input applied separately for every value of
    // the first input (partial integro-differential problems).
    slice_fredholm,
    slice_volterra
};

struct OperatorTerm {
    TermKind kind = TermKind::fredholm;
    int unknown = 0;
    ops::Kernel1 k1;
    ops::Kernel2 k2;
    ops::Kernel3 k3;
    std::function<double(double x, double t, double s)> kslice;
    std::vector<Interval> box;  // Fredholm limits per axis; empty means the domain
    ops::Bound g, h;            // Volterra limits along x; empty means a and x
    ops::Bound g2, h2;          // second axis of 2-D Volterra
    Zeta zeta;                  // empty means identity
    bool zeta_on_derivative = false;  // zeta receives (u, u') through zeta2
    std::function<Tensor(const Tensor& u, const Tensor& du)> zeta2;
    // Inner rule. The kernel is always the full integrand; a weighted family
    // has its weight divided out at the reference nodes.
    quadrature::Family family = quadrature::Family::legendre();
};

struct Derivative {
    enum class Kind { none, ordinal, fractional };
    Kind kind = Kind::none;
    int order = 0;
    int axis = 0;
    double alpha = 0.0;  // fractional order in (0,1) or (1,2)

    static Derivative ordinal(int order, int axis = 0) { return {Kind::ordinal, order, axis, 0.0}; }
    static Derivative fractional(double alpha) { return {Kind::fractional, 0, 0, alpha}; }
};

struct TermRef {
    int term = 0;
    double sign = 1.0;
    int param = -1;  // trainable coefficient multiplying the term
};

// kappa * D(u) + u_coef * u = S + sum(sign * coef * I). With Kind::none D(u) = u.
struct Equation {
    int unknown = 0;
    double kappa = 1.0;
    Derivative derivative;
    double u_coef = 0.0;
    Model source;
    std::vector<TermRef> terms;
};

struct Condition {
    std::string kind = "ic";  // ic, bc or data
    int unknown = 0;
    ad::Mat points;           // P x d
    int order = 0;
    int axis = 0;
    Eigen::VectorXd values;
    double weight = 1.0;
};

struct TrainableParam {
    std::string name;
    bool per_node = false;   // one value per collocation node
    double init = 0.0;
    double truth = kNaN;     // scalar reference
    std::function<double(double)> truth_fn;  // per-node reference
};

struct Unknown {
    std::string name;
    Model exact;  // optional
};

class Fields;
class Session;
using Metrics = std::vector<std::pair<std::string, double>>;

struct OptimalControlSpec {
    double gamma = 1.0;
    std::function<Tensor(Fields&)> running_cost;  // N x 1 at the collocation nodes
    double j_reference = kNaN;
    bool j_reference_soft = false;  // taken from another study, not analytic
    // State history before the domain start (delay problems).
    std::function<double(double)> history;
    Interval history_domain{0.0, 0.0};
};

struct ProblemSpec {
    std::string id;
    std::string title;
    std::vector<Interval> domain;
    std::vector<Interval> test_domain;  // empty means the domain
    bool laguerre_nodes = false;        // collocation on [a, inf) at Laguerre nodes
    int n = 30;                         // collocation points per axis
    int n_inner = 0;                    // inner nodes for operators; 0 means n
    std::vector<Unknown> unknowns;
    std::vector<OperatorTerm> terms;
    std::vector<Equation> equations;
    // Replaces the declarative equations when set.
    std::function<std::vector<Tensor>(Fields&)> residual;
    std::vector<Condition> conditions;
    std::vector<TrainableParam> params;
    std::optional<OptimalControlSpec> control;
    opt::Schedule schedule;
    double residual_tol = 1e-6;  // zero-residual gate for the exact solution
    std::function<void(Session&, Metrics&)> post;

    int dim() const { return static_cast<int>(domain.size()); }
    bool has_exact() const;
    bool fractional() const;
    void validate() const;
};

// Values (or derivatives) of a closed-form model at points, for conditions.
Eigen::VectorXd evaluate_model(const Model& m, const ad::Mat& points, int order = 0, int axis = 0);
Tensor col(const Tensor& X, int axis);

struct SessionOptions {
    int n = 0;                      // 0 keeps the spec value
    int n_inner = 0;
    std::vector<int> hidden = {10, 10};
    std::uint64_t seed = 42;
    std::optional<quadrature::Family> quad;  // inner rule override
    double gamma = 0.0;             // 0 keeps the spec value
};

struct LossParts {
    Tensor loss;
    double residual_mse = 0.0;
    double condition_sum = 0.0;
    double j = kNaN;
};

class Session {
public:
    explicit Session(ProblemSpec spec, SessionOptions opt = {});
    ~Session();
    Session(const Session&) = delete;
    Session& operator=(const Session&) = delete;

    const ProblemSpec& spec() const { return spec_; }
    const SessionOptions& options() const { return opt_; }
    int n_points() const;                 // collocation rows
    const ad::Mat& X() const;             // collocation coordinates, N x d
    const Eigen::VectorXd& quad_weights() const;  // tensor rule weights including scale
    double gamma() const;

    std::vector<Mlp>& nets() { return nets_; }
    const std::vector<Mlp>& nets() const { return nets_; }
    std::vector<Tensor>& params() { return params_; }
    std::vector<Tensor> parameters() const;  // network parameters, then trainable extras
    Eigen::VectorXd flat() const;
    void set_flat(const Eigen::VectorXd& theta);

    std::vector<Model> network_models() const;
    std::vector<Model> exact_models() const;   // throws if any unknown lacks one
    std::vector<Tensor> param_values() const;  // live trainable tensors
    std::vector<Tensor> truth_params() const;  // constants from the declared truths

    std::vector<Tensor> residuals(const std::vector<Model>& models, const std::vector<Tensor>& params) const;
    LossParts loss(const std::vector<Model>& models, const std::vector<Tensor>& params) const;
    double loss_and_grad(const Eigen::VectorXd& theta, Eigen::VectorXd& grad);

    // Mean absolute error of every unknown with an exact solution on the test grid.
    std::vector<std::pair<std::string, double>> errors() const;
    ad::Mat test_grid() const;
    Metrics metrics();

    struct Compiled;
    const Compiled& compiled() const { return *c_; }

private:
    std::vector<Tensor> residuals_in(Fields& f) const;

    ProblemSpec spec_;
    SessionOptions opt_;
    std::unique_ptr<Compiled> c_;
    std::vector<Mlp> nets_;
    std::vector<Tensor> params_;
};

// Per-evaluation view of the unknowns at the collocation nodes. Forward
// passes and derivatives are cached for the lifetime of the object.
class Fields {
public:
    Fields(const Session& s, const std::vector<Model>& models, const std::vector<Tensor>& params);

    const Session& session() const { return s_; }
    int rows() const;
    Tensor x(int axis = 0) const;  // collocation coordinate column
    Tensor u(int k);
    Tensor d(int k, int axis, int order);
    Tensor at(int k, const ad::Mat& points);
    Tensor d_at(int k, const ad::Mat& points, int axis, int order);
    Tensor caputo(int k, double alpha);
    Tensor term(int i);
    // u_k(x - lag) at the collocation nodes; points before the domain start
    // read the spec's history function instead of the network.
    Tensor delayed(int k, double lag);
    Tensor param(int i) const { return params_.at(i); }

private:
    const Session& s_;
    const std::vector<Model>& models_;
    std::vector<Tensor> params_;
    Tensor Xleaf_;
    std::vector<Tensor> U_;
    std::map<std::tuple<int, int, int>, Tensor> D_;
    std::map<int, Tensor> terms_;
    std::map<std::pair<int, double>, Tensor> caputo_;
};

double mae(std::span<const double> exact, std::span<const double> predicted);

// Registry. IDs are stable; see README for the list.
const std::vector<ProblemSpec>& suite_registry();
const ProblemSpec& find_suite(const std::string& id);  // throws std::out_of_range
std::vector<ProblemSpec> forward_suites();
std::vector<ProblemSpec> control_suites();
ProblemSpec population_spec(double kappa, double alpha);
ProblemSpec oc_delay_spec(double gamma);
// Relabels unknowns by perm (new index = perm[old]) and reorders equations.
ProblemSpec permute_unknowns(const ProblemSpec& s, const std::vector<int>& perm);

struct RunConfig {
    int n = 0;                    // 0: spec default
    std::vector<int> hidden = {10, 10};
    int adam_epochs = -1;         // <0: spec default
    double adam_lr = -1.0;
    int lbfgs_epochs = -1;
    double lr = -1.0;             // L-BFGS first trial step
    std::uint64_t seed = 42;
    std::string quad;             // empty: spec default
    double gamma = 0.0;
};

struct RunReport {
    std::string suite_id;
    int n_train = 0;
    std::vector<int> widths;
    int adam_epochs = 0;
    int lbfgs_epochs = 0;
    double lr = 0.0;
    std::uint64_t seed = 0;
    std::string quad;
    double final_loss = kNaN;
    std::vector<double> losses;
    std::optional<double> mae;
    std::optional<double> j_value;
    Metrics metrics;
    double wall_ms = 0.0;
    bool finite = true;
    std::string message;
};

RunReport solve(const ProblemSpec& spec, const RunConfig& cfg,
                const std::function<void(const std::string&, int, double)>& on_epoch = {});

}  // namespace qpinn
