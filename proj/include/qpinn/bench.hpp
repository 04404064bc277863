#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "qpinn/problems.hpp"

namespace qpinn::bench {

struct BenchConfig {
    std::string suite = "t3r1";  // comma separated globs over suite IDs
    int n = 0;                   // 0: suite default
    std::vector<int> widths = {10, 10};
    int adam_epochs = -1;
    double adam_lr = -1.0;
    int lbfgs_epochs = -1;
    double lr = -1.0;
    std::vector<std::uint64_t> seeds = {42};
    std::string quad;
    double gamma = 0.0;
    int jobs = 1;
};

struct Row {
    RunReport report;
    bool best = false;
};

// Suite IDs matching any of the comma separated patterns, in registry order.
// Throws std::out_of_range naming the first pattern with no match.
std::vector<std::string> select_suites(const std::string& patterns);

// One row per (suite, seed). Runs may be spread over jobs worker threads; the
// row order and contents do not depend on the worker count.
std::vector<Row> run(const BenchConfig& cfg, const std::function<void(const Row&)>& on_row = {});

struct SweepConfig {
    BenchConfig base;
    std::vector<int> n_values;
    std::vector<std::vector<int>> widths;
    std::vector<double> lrs;
};
std::vector<Row> sweep(const SweepConfig& cfg, const std::function<void(const Row&)>& on_row = {});

// Marks the lowest-MAE row (lowest final loss without an exact solution) of
// each suite that ran with more than one seed.
void mark_best(std::vector<Row>& rows);
bool any_nonfinite(const std::vector<Row>& rows);

std::string widths_text(const std::vector<int>& w);     // 1-10-10-1
std::vector<int> parse_widths(const std::string& text);  // 10-10 or 10,10
std::string format_real(double v);                       // 17 significant digits

extern const std::vector<std::string> kColumns;
std::string to_csv(const std::vector<Row>& rows);
std::string to_json(const std::vector<Row>& rows);
std::vector<Row> parse_csv(const std::string& text);

// Absolute errors of three integration methods against a closed form.
struct QuadRow {
    std::string function;
    double a = 0.0, b = 1.0;
    int n = 0;
    double exact = 0.0;
    double gauss = 0.0, trapezoid = 0.0, monte_carlo = 0.0;
};
const std::vector<std::string>& quad_functions();
std::vector<QuadRow> quad_compare(const std::string& function, double a, double b, const std::vector<int>& ns,
                                  std::uint64_t seed);
std::string quad_csv(const std::vector<QuadRow>& rows);
std::string quad_json(const std::vector<QuadRow>& rows);

}  // namespace qpinn::bench
