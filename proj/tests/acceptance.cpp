// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Training criteria use seeds 42..46 and stop at the first
// seed that meets the threshold.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "checks.hpp"
#include "oracles.hpp"
#include "qpinn/bench.hpp"
#include "qpinn/network.hpp"
#include "qpinn/problems.hpp"

#ifndef QPINN_CLI
#error "QPINN_CLI must point at the command line binary"
#endif

using namespace qpinn;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void verdict(int id, const char* what, const Outcome& o, double seconds) {
    if (!o.pass) ++failures;
    std::printf("criterion %2d %s  %s: %s (%.2f s)\n", id, o.pass ? "PASS" : "FAIL", what, o.detail.c_str(),
                seconds);
    std::fflush(stdout);
}

template <class F>
void criterion(int id, const char* what, F&& body) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    verdict(id, what, o, std::chrono::duration<double>(Clock::now() - t0).count());
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

double metric(const RunReport& r, const std::string& key) {
    for (const auto& [k, v] : r.metrics)
        if (k == key) return v;
    return kNaN;
}

// Normalized score: a run passes when score <= 1.
using Score = std::function<double(const RunReport&)>;

struct Best {
    RunReport report;
    double score = INFINITY;
    int seeds_tried = 0;
    double seconds = 0.0;
};

Best best_of_five(const std::string& suite, const Score& score, RunConfig cfg = {}) {
    Best best;
    const auto t0 = Clock::now();
    for (std::uint64_t seed = 42; seed < 47; ++seed) {
        cfg.seed = seed;
        RunReport r = solve(find_suite(suite), cfg);
        double s = r.finite ? score(r) : INFINITY;
        if (std::isnan(s)) s = INFINITY;
        ++best.seeds_tried;
        if (s < best.score) {
            best.score = s;
            best.report = r;
        }
        if (best.score <= 1.0) break;
    }
    best.seconds = seconds_since(t0);
    return best;
}

Score mae_within(double limit) {
    return [limit](const RunReport& r) { return r.mae ? *r.mae / limit : INFINITY; };
}

std::string fix(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.7g", v);
    return buf;
}

std::string seed_note(const Best& b) {
    return "seed " + std::to_string(b.report.seed) + ", " + std::to_string(b.seeds_tried) + " tried, " +
           sci(b.seconds) + " s";
}

// Trains each row and prints one indented line per row.
Outcome table_rows(const std::vector<std::pair<std::string, double>>& rows, double max_seconds) {
    Outcome o{true, ""};
    int passed = 0;
    for (const auto& [id, limit] : rows) {
        const Best b = best_of_five(id, mae_within(limit));
        const bool ok = b.score <= 1.0 && b.seconds <= max_seconds;
        passed += ok;
        o.pass = o.pass && ok;
        std::printf("    %-7s mae %-10s limit %-9s %s  %s\n", id.c_str(),
                    b.report.mae ? sci(*b.report.mae).c_str() : "n/a", sci(limit).c_str(), ok ? "ok" : "MISSED",
                    seed_note(b).c_str());
        std::fflush(stdout);
    }
    o.detail = std::to_string(passed) + "/" + std::to_string(rows.size()) + " rows within their limits";
    return o;
}

bool zero_residual_gate(std::string& detail) {
    int checked = 0, failed = 0;
    double worst_smooth = 0.0, worst_abel = 0.0;
    for (const auto& spec : suite_registry()) {
        if (!spec.has_exact() || spec.control || !spec.params.empty()) continue;
        Session s(spec);
        double r = 0.0;
        for (const auto& t : s.residuals(s.exact_models(), {})) r = std::max(r, t.value().cwiseAbs().maxCoeff());
        const bool abel = spec.id == "t3r11" || spec.id == "t3r12";
        (abel ? worst_abel : worst_smooth) = std::max(abel ? worst_abel : worst_smooth, r);
        if (!(r <= (abel ? 1e-2 : 1e-6))) {
            ++failed;
            std::printf("    %s max|R| = %s\n", spec.id.c_str(), sci(r).c_str());
        }
        ++checked;
    }
    detail = std::to_string(checked) + " forward specs, worst smooth " + sci(worst_smooth) + ", worst Abel " +
             sci(worst_abel);
    return failed == 0 && checked > 0;
}

double session_gradient_error(const std::string& suite) {
    SessionOptions so;
    so.n = 12;
    Session s(find_suite(suite), so);
    Eigen::VectorXd theta = s.flat(), g;
    s.loss_and_grad(theta, g);
    auto f = [&](const std::vector<double>& v) {
        Eigen::VectorXd t = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
        Eigen::VectorXd unused;
        return s.loss_and_grad(t, unused);
    };
    const auto fd = oracle::fd_gradient(f, std::vector<double>(theta.data(), theta.data() + theta.size()), 1e-5);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < g.size(); ++i)
        worst = std::max(worst, std::abs(g[i] - fd[i]) / std::max(1e-3, std::abs(fd[i])));
    return worst;
}

// CLI helpers

int shell(const std::string& cmd) {
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

// Drops the wall-time column (CSV) or field (JSON).
std::string strip_wall_time(const std::string& text) {
    std::istringstream in(text);
    std::string line, out;
    int col = -1;
    while (std::getline(in, line)) {
        if (line.find("\"wall_time_ms\"") != std::string::npos) continue;
        std::vector<std::string> f;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) f.push_back(cell);
        if (col < 0)
            for (std::size_t i = 0; i < f.size(); ++i)
                if (f[i] == "wall_time_ms") col = static_cast<int>(i);
        for (std::size_t i = 0; i < f.size(); ++i)
            if (static_cast<int>(i) != col) out += f[i] + ",";
        out += "\n";
    }
    return out;
}

}  // namespace

int main() {
    std::printf("acceptance: %zu registered suites\n", suite_registry().size());

    criterion(1, "quadrature exactness", [] {
        const auto t0 = Clock::now();
        std::string worst;
        const double v = checks::exactness_violation(12, &worst);
        const double s = seconds_since(t0);
        return Outcome{v <= 1e-10 && s < 5.0,
                       "worst scaled moment error " + sci(v) + " (" + worst + "), limit 1e-10"};
    });

    criterion(2, "integration rule ordering", [] {
        const auto t0 = Clock::now();
        const auto r = bench::quad_compare("exp", 0.0, 1.0, {16}, 42).at(0);
        const bool ok = r.gauss < 1e-12 && r.gauss < r.trapezoid && r.gauss < r.monte_carlo;
        return Outcome{ok && seconds_since(t0) < 1.0, "e^x on [0,1], N=16: gauss " + sci(r.gauss) + ", trapezoid " +
                                                          sci(r.trapezoid) + ", monte carlo " + sci(r.monte_carlo)};
    });

    criterion(3, "operator oracle equivalence", [] {
        const auto t0 = Clock::now();
        double worst = 0.0;
        for (const char* kind : {"fredholm", "volterra", "fredholm2d", "volterra2d", "fredholm3d"})
            worst = std::max(worst, checks::operator_oracle_deviation(kind, 20, 7));
        return Outcome{worst <= 1e-12 && seconds_since(t0) < 30.0,
                       "5 kinds x 20 cases, worst relative deviation " + sci(worst)};
    });

    criterion(4, "Caputo L1 convergence", [] {
        const auto t0 = Clock::now();
        bool ok = true;
        std::string d;
        for (double a : {0.25, 0.5, 0.75}) {
            const auto c = checks::caputo_convergence(a);
            double lo = INFINITY;
            for (double o : c.orders) lo = std::min(lo, o);
            ok = ok && c.positive && lo >= 1.2 && !c.orders.empty();
            d += (d.empty() ? "" : ", ") + std::string("alpha ") + sci(a) + " min order " + sci(lo);
        }
        return Outcome{ok && seconds_since(t0) < 5.0, d};
    });

    bool gate = false;
    criterion(5, "zero-residual transcription gate", [&] {
        const auto t0 = Clock::now();
        std::string d;
        gate = zero_residual_gate(d);
        return Outcome{gate && seconds_since(t0) < 60.0, d};
    });

    const auto gated = [&](auto body) {
        return [&gate, body]() -> Outcome {
            if (!gate) return {false, "not attempted, the zero-residual gate failed"};
            return body();
        };
    };

    criterion(6, "forward integral equations, best of 5", gated([] {
                  // 10x the reference MAEs; Abel rows at 1e-2.
                  return table_rows({{"t3r1", 4.45e-4},
                                     {"t3r2", 1.56e-4},
                                     {"t3r3", 1.48e-5},
                                     {"t3r4", 2.34e-4},
                                     {"t3r5", 7.85e-3},
                                     {"t3r6", 3.29e-3},
                                     {"t3r7", 1.11e-4},
                                     {"t3r8", 2.30e-4},
                                     {"t3r9", 1.95e-4},
                                     {"t3r10", 3.41e-4},
                                     {"t3r11", 1e-2},
                                     {"t3r12", 1e-2},
                                     {"t3r13", 3.71e-4}},
                                    120.0);
              }));

    criterion(7, "integro-differential, PIDE, multi-dimensional and system spot checks", gated([] {
                  return table_rows({{"t4r1", 2.74e-6}, {"t5r1", 3.07e-3}, {"t7r1", 2.25e-3}, {"t8r2", 2.5e-4}},
                                    300.0);
              }));

    criterion(8, "optimal control", gated([] {
                  Outcome o{true, ""};
                  struct Case {
                      const char* id;
                      double j_ref;
                      double j_tol;
                      const char* state;  // state MAE metric, empty when not checked
                  };
                  for (const Case& c : {Case{"oc-ex1", 0.328259, 5e-3, "mae_chi"}, Case{"oc-ex5", 0.380797, 5e-3, ""},
                                        Case{"oc-ex3", 0.0, 1e-3, ""}}) {
                      const std::string state = c.state;
                      const Best b = best_of_five(c.id, [&](const RunReport& r) {
                          double s = r.j_value ? std::abs(*r.j_value - c.j_ref) / c.j_tol : INFINITY;
                          if (!state.empty()) s = std::max(s, metric(r, state) / 1e-2);
                          return s;
                      });
                      const bool ok = b.score <= 1.0 && b.seconds <= 180.0;
                      o.pass = o.pass && ok;
                      std::printf("    %-7s J %-10s reference %-9s", c.id, fix(b.report.j_value.value_or(kNaN)).c_str(),
                                  fix(c.j_ref).c_str());
                      if (!state.empty()) std::printf(" state mae %-9s", sci(metric(b.report, state)).c_str());
                      std::printf(" %s  %s\n", ok ? "ok" : "MISSED", seed_note(b).c_str());
                      o.detail += (o.detail.empty() ? "" : ", ") + std::string(c.id) + " J " +
                                  fix(b.report.j_value.value_or(kNaN));
                  }
                  return o;
              }));

    criterion(9, "population model peak", gated([] {
                  const double ref = 0.7697415;
                  const Best b = best_of_five("pop-k0.1-a1",
                                              [&](const RunReport& r) { return std::abs(metric(r, "u_max") - ref) / 2e-2; });
                  const double u = metric(b.report, "u_max");
                  return Outcome{b.score <= 1.0 && b.seconds <= 180.0,
                                 "u_max " + fix(u) + " at x " + fix(metric(b.report, "x_max")) + ", reference " +
                                     fix(ref) + ", " + seed_note(b)};
              }));

    criterion(10, "inverse recovery of kappa", gated([] {
                  const Best b = best_of_five("inv-ex5", [](const RunReport& r) {
                      const double k = metric(r, "kappa");
                      return std::max(std::abs(k - 0.5) / (0.02 * 0.5), r.mae ? *r.mae / 1e-2 : INFINITY);
                  });
                  return Outcome{b.score <= 1.0 && b.seconds <= 120.0,
                                 "kappa " + fix(metric(b.report, "kappa")) + " (true 0.5), u mae " +
                                     sci(b.report.mae.value_or(kNaN)) + ", " + seed_note(b)};
              }));

    criterion(11, "gradient integrity", [] {
        const auto t0 = Clock::now();
        Mlp m({1, 10, 10, 1}, Activation::tanh, 42);
        ad::Mat X(16, 1);
        for (int i = 0; i < 16; ++i) X(i, 0) = -1.0 + 2.0 * i / 15.0;
        const ad::Mat Y = X.array().sin();
        auto loss_of = [&](const Mlp& net) {
            return ad::mean(ad::square(net.forward(ad::constant(X)) - ad::constant(Y)));
        };
        const Eigen::VectorXd g = flat_gradient(loss_of(m), m.parameters());
        const Eigen::VectorXd theta = m.flat();
        auto f = [&](const std::vector<double>& v) {
            Mlp c = m;
            c.set_flat(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
            ad::NoGrad ng;
            return loss_of(c).item();
        };
        const auto fd = oracle::fd_gradient(f, std::vector<double>(theta.data(), theta.data() + theta.size()), 1e-4);
        m.set_flat(theta);
        double net = 0.0;
        for (Eigen::Index i = 0; i < g.size(); ++i)
            net = std::max(net, std::abs(g[i] - fd[i]) / std::max(1e-3, std::abs(fd[i])));

        const double h = 1e-4;
        double d1 = 0.0, d2 = 0.0;
        const ad::Mat u1 = m.input_derivative(ad::constant(X), 1, 0).value();
        const ad::Mat u2 = m.input_derivative(ad::constant(X), 2, 0).value();
        const ad::Mat up = m.predict(X.array() + h), um = m.predict(X.array() - h), u0 = m.predict(X);
        for (int i = 0; i < 16; ++i) {
            const double f1 = (up(i, 0) - um(i, 0)) / (2 * h);
            const double f2 = (up(i, 0) - 2 * u0(i, 0) + um(i, 0)) / (h * h);
            d1 = std::max(d1, std::abs(u1(i, 0) - f1) / std::max(1.0, std::abs(f1)));
            d2 = std::max(d2, std::abs(u2(i, 0) - f2) / std::max(1.0, std::abs(f2)));
        }

        double loss_grad = 0.0;
        for (const char* id : {"t4r1", "t8r2", "oc-ex1", "inv-ex5"})
            loss_grad = std::max(loss_grad, session_gradient_error(id));

        const bool ok = net < 1e-5 && d1 < 1e-6 && d2 < 1e-4 && loss_grad < 1e-5 && seconds_since(t0) < 10.0;
        return Outcome{ok, "parameters " + sci(net) + ", du/dx " + sci(d1) + ", d2u/dx2 " + sci(d2) +
                               ", full losses " + sci(loss_grad)};
    });

    criterion(12, "CLI determinism", [] {
        namespace fs = std::filesystem;
        const fs::path dir = fs::temp_directory_path() / ("qpinn-acceptance-" + std::to_string(::getpid()));
        fs::create_directories(dir);
        const std::string cli = QPINN_CLI;
        const std::vector<std::pair<std::string, std::string>> cmds{
            {"run.csv", "run --suite t3r1 --n 30 --epochs-lbfgs 100 --lr 0.1 --seed 7"},
            {"run.json", "run --suite t3r4,oc-ex2 --seeds 2 --jobs 2 --epochs-adam 50 --epochs-lbfgs 5 --format json"},
            {"sweep.csv", "sweep --suite ex1 --n 5,10 --epochs-lbfgs 10"},
            {"quad.csv", "quad-compare --function runge --a -1 --b 1 --n 4,16,64 --seed 3"},
        };
        Outcome o{true, ""};
        int same = 0;
        for (const auto& [file, args] : cmds) {
            std::string text[2];
            for (int k = 0; k < 2; ++k) {
                const fs::path out = dir / (std::to_string(k) + "-" + file);
                const std::string quiet = file == "quad.csv" ? "" : " --quiet";
                if (shell(cli + " " + args + quiet + " --out " + out.string() + " 2>/dev/null") != 0) o.pass = false;
                text[k] = slurp(out);
            }
            const bool eq = !text[0].empty() && strip_wall_time(text[0]) == strip_wall_time(text[1]);
            same += eq;
            o.pass = o.pass && eq;
        }
        const int unknown = shell(cli + " run --suite nosuch >/dev/null 2>&1");
        o.pass = o.pass && unknown == 1;
        fs::remove_all(dir);
        o.detail = std::to_string(same) + "/" + std::to_string(cmds.size()) +
                   " commands byte-identical apart from wall time, unknown suite exit " + std::to_string(unknown);
        return o;
    });

    std::printf("acceptance: %d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
