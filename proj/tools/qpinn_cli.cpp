// Command line front end: run registered suites, sweep hyperparameters,
// compare integration rules, list suites.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qpinn/bench.hpp"

namespace {

using namespace qpinn;

struct Output {
    std::string path;
    std::string format = "csv";
};

void add_output(CLI::App* sub, Output& out) {
    sub->add_option("--out", out.path, "Report path (default: $QPINN_OUTPUT_DIR/<command>.<format>, else stdout)");
    sub->add_option("--format", out.format, "Report format")->check(CLI::IsMember({"csv", "json"}));
}

int emit(const Output& out, const std::string& command, const std::string& text) {
    std::string path = out.path;
    if (path.empty()) {
        if (const char* dir = std::getenv("QPINN_OUTPUT_DIR"); dir && *dir) {
            std::filesystem::create_directories(dir);
            path = (std::filesystem::path(dir) / (command + "." + out.format)).string();
        }
    }
    if (path.empty()) {
        std::cout << text;
        return 0;
    }
    std::ofstream f(path, std::ios::binary);
    f << text;
    if (!f) {
        std::cerr << "error: cannot write " << path << "\n";
        return 1;
    }
    return 0;
}

void print_suites(std::ostream& os) {
    for (const auto& s : suite_registry()) os << s.id << "\t" << s.title << "\n";
}

void progress(const bench::Row& row) {
    const RunReport& r = row.report;
    std::fprintf(stderr, "%-14s n=%-4d seed=%-4llu loss=%.3e", r.suite_id.c_str(), r.n_train,
                 static_cast<unsigned long long>(r.seed), r.final_loss);
    if (r.mae) std::fprintf(stderr, " mae=%.3e", *r.mae);
    if (r.j_value) std::fprintf(stderr, " J=%.6f", *r.j_value);
    std::fprintf(stderr, " %.0f ms\n", r.wall_ms);
}

struct Common {
    bench::BenchConfig cfg;
    std::string widths = "10-10";
    int seed = 42;
    int seeds = 1;
    bool quiet = false;
};

void add_training(CLI::App* sub, Common& c) {
    sub->add_option("--suite", c.cfg.suite, "Suite IDs, comma separated globs");
    sub->add_option("--epochs-adam", c.cfg.adam_epochs, "Adam epochs (default: suite schedule)")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--epochs-lbfgs", c.cfg.lbfgs_epochs, "L-BFGS epochs (default: suite schedule)")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--adam-lr", c.cfg.adam_lr, "Adam learning rate")->check(CLI::PositiveNumber);
    sub->add_option("--seed", c.seed, "First seed")->check(CLI::NonNegativeNumber);
    sub->add_option("--seeds", c.seeds, "Number of consecutive seeds")->check(CLI::PositiveNumber);
    sub->add_option("--quad", c.cfg.quad, "Inner quadrature family override, e.g. legendre or jacobi:-0.5,0");
    sub->add_option("--gamma", c.cfg.gamma, "Penalty weight for control problems")->check(CLI::PositiveNumber);
    sub->add_option("--jobs", c.cfg.jobs, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--quiet", c.quiet, "No progress lines on stderr");
}

void finish_training(Common& c) {
    c.cfg.seeds.clear();
    for (int i = 0; i < c.seeds; ++i) c.cfg.seeds.push_back(static_cast<std::uint64_t>(c.seed + i));
}

int unknown_suite(const std::exception& e) {
    std::cerr << "error: " << e.what() << "\nvalid suite IDs:\n";
    print_suites(std::cerr);
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Physics-informed solver for integral, integro-differential and fractional problems"};
    app.require_subcommand(1);

    Common run_opts;
    Output run_out;
    auto* run = app.add_subcommand("run", "Train registered suites and report one row per suite and seed");
    add_training(run, run_opts);
    run->add_option("--n", run_opts.cfg.n, "Training points (default: suite setting)");
    run->add_option("--widths", run_opts.widths, "Hidden layer widths, e.g. 10-10");
    run->add_option("--lr", run_opts.cfg.lr, "L-BFGS learning rate")->check(CLI::PositiveNumber);
    add_output(run, run_out);

    Common sweep_opts;
    sweep_opts.cfg.suite = "ex[1-4]";
    Output sweep_out;
    std::vector<int> sweep_n;
    std::vector<std::string> sweep_widths;
    std::vector<double> sweep_lr;
    auto* sweep = app.add_subcommand("sweep", "Cartesian product over training points, widths and learning rates");
    add_training(sweep, sweep_opts);
    sweep->add_option("--n", sweep_n, "Training point counts")->delimiter(',');
    sweep->add_option("--widths", sweep_widths, "Hidden layer lists, e.g. 10-10,10-10-10")->delimiter(',');
    sweep->add_option("--lr", sweep_lr, "L-BFGS learning rates")->delimiter(',');
    add_output(sweep, sweep_out);

    std::string function = "exp";
    double qa = 0.0, qb = 1.0;
    std::vector<int> qn{2, 4, 8, 16, 32, 64, 128};
    int qseed = 42;
    Output quad_out;
    auto* quad = app.add_subcommand("quad-compare", "Gauss, trapezoid and Monte Carlo errors on a test integral");
    quad->add_option("--function", function, "Integrand: exp, sin, runge, sqrt, const");
    quad->add_option("--a", qa, "Lower limit");
    quad->add_option("--b", qb, "Upper limit");
    quad->add_option("--n", qn, "Node / sample counts")->delimiter(',');
    quad->add_option("--seed", qseed, "Monte Carlo seed")->check(CLI::NonNegativeNumber);
    add_output(quad, quad_out);

    app.add_subcommand("list", "List suite IDs");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("list")) {
            print_suites(std::cout);
            return 0;
        }

        if (app.got_subcommand("quad-compare")) {
            std::vector<bench::QuadRow> rows;
            try {
                rows = bench::quad_compare(function, qa, qb, qn, static_cast<std::uint64_t>(qseed));
            } catch (const std::out_of_range& e) {
                std::cerr << "error: " << e.what() << "\nfunctions:";
                for (const auto& f : bench::quad_functions()) std::cerr << " " << f;
                std::cerr << "\n";
                return 1;
            }
            return emit(quad_out, "quad-compare",
                        quad_out.format == "json" ? bench::quad_json(rows) : bench::quad_csv(rows));
        }

        const bool is_run = app.got_subcommand("run");
        Common& c = is_run ? run_opts : sweep_opts;
        const Output& out = is_run ? run_out : sweep_out;
        finish_training(c);
        try {
            bench::select_suites(c.cfg.suite);
        } catch (const std::out_of_range& e) {
            return unknown_suite(e);
        }

        std::vector<bench::Row> rows;
        const auto on_row = c.quiet ? std::function<void(const bench::Row&)>{} : progress;
        if (is_run) {
            c.cfg.widths = bench::parse_widths(c.widths);
            rows = bench::run(c.cfg, on_row);
        } else {
            bench::SweepConfig sc;
            sc.base = c.cfg;
            sc.base.widths = bench::parse_widths(c.widths);
            sc.n_values = sweep_n;
            for (const auto& w : sweep_widths) sc.widths.push_back(bench::parse_widths(w));
            sc.lrs = sweep_lr;
            rows = bench::sweep(sc, on_row);
        }

        const std::string text = out.format == "json" ? bench::to_json(rows) : bench::to_csv(rows);
        if (int rc = emit(out, is_run ? "run" : "sweep", text); rc != 0) return rc;
        if (bench::any_nonfinite(rows)) {
            std::cerr << "error: non-finite loss in at least one run\n";
            return 2;
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
