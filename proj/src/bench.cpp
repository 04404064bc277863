#include "qpinn/bench.hpp"

#include <fnmatch.h>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "qpinn/quadrature.hpp"

namespace qpinn::bench {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(cur);
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

double parse_real(const std::string& s) {
    if (s.empty()) return kNaN;
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("bad number '" + s + "'");
    return v;
}

RunConfig to_run_config(const BenchConfig& c, std::uint64_t seed) {
    RunConfig r;
    r.n = c.n;
    r.hidden = c.widths;
    r.adam_epochs = c.adam_epochs;
    r.adam_lr = c.adam_lr;
    r.lbfgs_epochs = c.lbfgs_epochs;
    r.lr = c.lr;
    r.seed = seed;
    r.quad = c.quad;
    r.gamma = c.gamma;
    return r;
}

struct Job {
    std::string suite;
    RunConfig cfg;
};

std::vector<Row> execute(const std::vector<Job>& jobs, int workers, const std::function<void(const Row&)>& on_row) {
    std::vector<Row> rows(jobs.size());
    std::vector<std::exception_ptr> errors(jobs.size());
    std::atomic<std::size_t> next{0};
    std::mutex m;
    auto work = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            try {
                rows[i].report = solve(find_suite(jobs[i].suite), jobs[i].cfg);
                if (on_row) {
                    std::lock_guard<std::mutex> lock(m);
                    on_row(rows[i]);
                }
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const int n = std::max(1, std::min<int>(workers, static_cast<int>(jobs.size())));
    if (n == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int k = 0; k < n; ++k) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    return rows;
}

}  // namespace

std::vector<std::string> select_suites(const std::string& patterns) {
    std::vector<std::string> out;
    const auto& reg = suite_registry();
    std::vector<bool> taken(reg.size(), false);
    for (const auto& raw : split(patterns, ',')) {
        const std::string p = trim(raw);
        if (p.empty()) continue;
        bool hit = false;
        for (std::size_t i = 0; i < reg.size(); ++i) {
            if (fnmatch(p.c_str(), reg[i].id.c_str(), 0) != 0) continue;
            hit = true;
            taken[i] = true;
        }
        if (!hit) throw std::out_of_range("no suite matches '" + p + "'");
    }
    for (std::size_t i = 0; i < reg.size(); ++i)
        if (taken[i]) out.push_back(reg[i].id);
    if (out.empty()) throw std::out_of_range("empty suite selection");
    return out;
}

std::vector<Row> run(const BenchConfig& cfg, const std::function<void(const Row&)>& on_row) {
    if (cfg.seeds.empty()) throw std::invalid_argument("at least one seed is required");
    if (cfg.n != 0 && cfg.n < 2) throw std::invalid_argument("n_train must be at least 2");
    if (cfg.adam_epochs == 0 && cfg.lbfgs_epochs == 0) throw std::invalid_argument("both training phases are empty");
    std::vector<Job> jobs;
    for (const auto& id : select_suites(cfg.suite))
        for (auto seed : cfg.seeds) jobs.push_back({id, to_run_config(cfg, seed)});
    std::vector<Row> rows = execute(jobs, cfg.jobs, on_row);
    mark_best(rows);
    return rows;
}

std::vector<Row> sweep(const SweepConfig& cfg, const std::function<void(const Row&)>& on_row) {
    const std::vector<int> ns = cfg.n_values.empty() ? std::vector<int>{cfg.base.n} : cfg.n_values;
    const auto ws = cfg.widths.empty() ? std::vector<std::vector<int>>{cfg.base.widths} : cfg.widths;
    const std::vector<double> lrs = cfg.lrs.empty() ? std::vector<double>{cfg.base.lr} : cfg.lrs;
    if (cfg.base.seeds.empty()) throw std::invalid_argument("empty sweep");
    std::vector<Job> jobs;
    for (const auto& id : select_suites(cfg.base.suite))
        for (int n : ns)
            for (const auto& w : ws)
                for (double lr : lrs)
                    for (auto seed : cfg.base.seeds) {
                        if (n != 0 && n < 2) throw std::invalid_argument("n_train must be at least 2");
                        BenchConfig c = cfg.base;
                        c.n = n;
                        c.widths = w;
                        c.lr = lr;
                        jobs.push_back({id, to_run_config(c, seed)});
                    }
    if (jobs.empty()) throw std::invalid_argument("empty sweep");
    return execute(jobs, cfg.base.jobs, on_row);
}

void mark_best(std::vector<Row>& rows) {
    std::map<std::string, std::vector<std::size_t>> by_suite;
    for (std::size_t i = 0; i < rows.size(); ++i) by_suite[rows[i].report.suite_id].push_back(i);
    for (auto& [id, idx] : by_suite) {
        if (idx.size() < 2) continue;
        auto score = [&](std::size_t i) {
            const RunReport& r = rows[i].report;
            const double v = r.mae ? *r.mae : r.final_loss;
            return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
        };
        std::size_t best = idx.front();
        for (std::size_t i : idx)
            if (score(i) < score(best)) best = i;
        rows[best].best = true;
    }
}

bool any_nonfinite(const std::vector<Row>& rows) {
    for (const auto& r : rows)
        if (!r.report.finite || !std::isfinite(r.report.final_loss)) return true;
    return false;
}

std::string widths_text(const std::vector<int>& w) {
    std::string s;
    for (std::size_t i = 0; i < w.size(); ++i) s += (i ? "-" : "") + std::to_string(w[i]);
    return s;
}

std::vector<int> parse_widths(const std::string& text) {
    std::vector<int> out;
    std::string t = text;
    for (char& c : t)
        if (c == ',') c = '-';
    for (const auto& part : split(t, '-')) {
        const std::string p = trim(part);
        std::size_t pos = 0;
        const int v = std::stoi(p, &pos);
        if (pos != p.size() || v < 1) throw std::invalid_argument("bad layer width '" + p + "'");
        out.push_back(v);
    }
    if (out.empty()) throw std::invalid_argument("no layer widths");
    return out;
}

std::string format_real(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

std::string wall_text(double ms) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.3f", ms);
    return buf;
}

}  // namespace

const std::vector<std::string> kColumns{
    "suite_id", "n_train", "widths",  "adam_epochs", "lbfgs_epochs", "lr",   "seed",
    "final_loss", "mae",   "j_value", "wall_time_ms", "quad",        "best", "metrics"};

std::string to_csv(const std::vector<Row>& rows) {
    std::ostringstream os;
    for (std::size_t i = 0; i < kColumns.size(); ++i) os << (i ? "," : "") << kColumns[i];
    os << '\n';
    for (const auto& row : rows) {
        const RunReport& r = row.report;
        std::string metrics;
        for (const auto& [k, v] : r.metrics) metrics += (metrics.empty() ? "" : ";") + k + "=" + format_real(v);
        os << r.suite_id << ',' << r.n_train << ',' << widths_text(r.widths) << ',' << r.adam_epochs << ','
           << r.lbfgs_epochs << ',' << format_real(r.lr) << ',' << r.seed << ',' << format_real(r.final_loss) << ','
           << (r.mae ? format_real(*r.mae) : "") << ',' << (r.j_value ? format_real(*r.j_value) : "") << ','
           << wall_text(r.wall_ms) << ',' << r.quad << ',' << (row.best ? 1 : 0)
           << ',' << metrics << '\n';
    }
    return os.str();
}

std::vector<Row> parse_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("empty report");
    if (split(line, ',') != kColumns) throw std::invalid_argument("unexpected report header");
    std::vector<Row> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != kColumns.size()) throw std::invalid_argument("wrong field count in '" + line + "'");
        Row row;
        RunReport& r = row.report;
        r.suite_id = f[0];
        r.n_train = std::stoi(f[1]);
        r.widths = parse_widths(f[2]);
        r.adam_epochs = std::stoi(f[3]);
        r.lbfgs_epochs = std::stoi(f[4]);
        r.lr = parse_real(f[5]);
        r.seed = std::stoull(f[6]);
        r.final_loss = parse_real(f[7]);
        r.finite = std::isfinite(r.final_loss);
        if (!f[8].empty()) r.mae = parse_real(f[8]);
        if (!f[9].empty()) r.j_value = parse_real(f[9]);
        r.wall_ms = parse_real(f[10]);
        r.quad = f[11];
        row.best = f[12] == "1";
        if (!f[13].empty())
            for (const auto& kv : split(f[13], ';')) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos) throw std::invalid_argument("bad metric '" + kv + "'");
                r.metrics.emplace_back(kv.substr(0, eq), parse_real(kv.substr(eq + 1)));
            }
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace {

nlohmann::ordered_json real(double v) {
    if (!std::isfinite(v)) return nullptr;
    return v;
}

std::string dump(const nlohmann::ordered_json& j) {
    return j.dump(2) + "\n";
}

}  // namespace

std::string to_json(const std::vector<Row>& rows) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& row : rows) {
        const RunReport& r = row.report;
        nlohmann::ordered_json o;
        o["suite_id"] = r.suite_id;
        o["n_train"] = r.n_train;
        o["widths"] = r.widths;
        o["adam_epochs"] = r.adam_epochs;
        o["lbfgs_epochs"] = r.lbfgs_epochs;
        o["lr"] = real(r.lr);
        o["seed"] = r.seed;
        o["final_loss"] = real(r.final_loss);
        o["mae"] = r.mae ? real(*r.mae) : nullptr;
        o["j_value"] = r.j_value ? real(*r.j_value) : nullptr;
        o["wall_time_ms"] = real(std::round(r.wall_ms * 1000.0) / 1000.0);
        o["quad"] = r.quad;
        o["best"] = row.best;
        nlohmann::ordered_json m = nlohmann::ordered_json::object();
        for (const auto& [k, v] : r.metrics) m[k] = real(v);
        o["metrics"] = m;
        arr.push_back(o);
    }
    return dump(arr);
}

namespace {

struct TestFunction {
    std::function<double(double)> f;
    std::function<double(double, double)> integral;
};

const std::map<std::string, TestFunction>& functions() {
    static const std::map<std::string, TestFunction> fs{
        {"exp", {[](double x) { return std::exp(x); }, [](double a, double b) { return std::exp(b) - std::exp(a); }}},
        {"sin", {[](double x) { return std::sin(x); }, [](double a, double b) { return std::cos(a) - std::cos(b); }}},
        {"runge",
         {[](double x) { return 1.0 / (1.0 + 25.0 * x * x); },
          [](double a, double b) { return (std::atan(5.0 * b) - std::atan(5.0 * a)) / 5.0; }}},
        {"sqrt",
         {[](double x) { return std::sqrt(x); },
          [](double a, double b) { return 2.0 / 3.0 * (std::pow(b, 1.5) - std::pow(a, 1.5)); }}},
        {"const", {[](double) { return 1.0; }, [](double a, double b) { return b - a; }}},
    };
    return fs;
}

}  // namespace

const std::vector<std::string>& quad_functions() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (const auto& [k, f] : functions()) v.push_back(k);
        return v;
    }();
    return names;
}

std::vector<QuadRow> quad_compare(const std::string& function, double a, double b, const std::vector<int>& ns,
                                  std::uint64_t seed) {
    auto it = functions().find(function);
    if (it == functions().end()) throw std::out_of_range("unknown function '" + function + "'");
    if (!(b > a)) throw std::invalid_argument("quad-compare: need a < b");
    if (function == "sqrt" && a < 0) throw std::invalid_argument("quad-compare: sqrt needs a >= 0");
    const auto& tf = it->second;
    const double exact = tf.integral(a, b);
    std::vector<QuadRow> rows;
    for (int n : ns) {
        if (n < 2) throw std::invalid_argument("quad-compare: N must be at least 2");
        QuadRow r;
        r.function = function;
        r.a = a;
        r.b = b;
        r.n = n;
        r.exact = exact;
        const auto rule = quadrature::gauss_legendre(n, a, b);
        std::vector<double> fv;
        for (double x : rule.mapped_nodes) fv.push_back(tf.f(x));
        r.gauss = std::abs(quadrature::integrate(rule, fv) - exact);
        std::vector<double> tv(n);
        for (int i = 0; i < n; ++i) tv[i] = tf.f(a + (b - a) * i / (n - 1));
        r.trapezoid = std::abs(quadrature::trapezoid(tv, a, b) - exact);
        r.monte_carlo = std::abs(quadrature::monte_carlo(tf.f, a, b, n, seed) - exact);
        rows.push_back(r);
    }
    return rows;
}

std::string quad_csv(const std::vector<QuadRow>& rows) {
    std::ostringstream os;
    os << "function,a,b,n,exact,gauss_error,trapezoid_error,monte_carlo_error\n";
    for (const auto& r : rows)
        os << r.function << ',' << format_real(r.a) << ',' << format_real(r.b) << ',' << r.n << ','
           << format_real(r.exact) << ',' << format_real(r.gauss) << ',' << format_real(r.trapezoid) << ','
           << format_real(r.monte_carlo) << '\n';
    return os.str();
}

std::string quad_json(const std::vector<QuadRow>& rows) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
        nlohmann::ordered_json o;
        o["function"] = r.function;
        o["a"] = r.a;
        o["b"] = r.b;
        o["n"] = r.n;
        o["exact"] = r.exact;
        o["gauss_error"] = r.gauss;
        o["trapezoid_error"] = r.trapezoid;
        o["monte_carlo_error"] = r.monte_carlo;
        arr.push_back(o);
    }
    return dump(arr);
}

}  // namespace qpinn::bench
