#pragma once

#include <Eigen/Dense>
#include <deque>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qpinn::opt {

using Vec = Eigen::VectorXd;
// Returns the loss at theta and writes the gradient into grad.
using LossFn = std::function<double(const Vec& theta, Vec& grad)>;

class NonFiniteError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct AdamState {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long step = 0;
    Vec m, v;
};

// Standard bias-corrected update. Throws NonFiniteError on a non-finite gradient.
Vec adam_step(AdamState& s, const Vec& theta, const Vec& grad);

struct LbfgsState {
    int history = 10;
    double c1 = 1e-4;
    double shrink = 0.5;
    int max_trials = 25;
    double curvature_eps = 1e-10;  // pairs kept when s'y > eps |s| |y|
    double first_step = 1.0;  // trial step of the very first iteration
    long iteration = 0;
    std::deque<Vec> s, y;
    // cached evaluation at the current point
    bool have_eval = false;
    double f = 0.0;
    Vec g;
};

struct LbfgsStep {
    Vec theta;
    double loss = 0.0;
    bool accepted = false;
    int evaluations = 0;
};

// Search direction -H g from the two-loop recursion.
Vec lbfgs_direction(const LbfgsState& s, const Vec& g);
// One iteration: direction, backtracking Armijo search, curvature-guarded
// history update. A failed search returns theta unchanged and clears history.
LbfgsStep lbfgs_step(LbfgsState& s, const Vec& theta, const LossFn& f);

struct Schedule {
    int adam_epochs = 0;
    double adam_lr = 1e-3;
    int lbfgs_epochs = 0;
    double lbfgs_lr = 1.0;
    int lbfgs_iters = 20;  // iterations per L-BFGS epoch
    int history = 10;
};

struct TrainReport {
    std::vector<double> losses;  // initial loss, then one entry per epoch
    double final_loss = 0.0;
    Vec theta;
    double wall_ms = 0.0;
    long evaluations = 0;
    bool finite = true;
    std::string message;
};

// Adam phase then L-BFGS phase. Stops early when the loss drops below 1e-14
// or the line search fails three times in a row. A non-finite loss ends the
// run with finite = false.
TrainReport train(const LossFn& f, const Vec& theta0, const Schedule& sched,
                  const std::function<void(const std::string& phase, int epoch, double loss)>& on_epoch = {});

}  // namespace qpinn::opt
