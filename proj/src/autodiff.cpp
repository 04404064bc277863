#include "qpinn/autodiff.hpp"

#include <cmath>
#include <sstream>
#include <string>
#include <unordered_map>

namespace qpinn::ad {

namespace {

thread_local bool g_grad_enabled = true;

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
    std::ostringstream msg;
    msg << op << ": incompatible shapes " << a.rows() << "x" << a.cols() << " and " << b.rows() << "x" << b.cols();
    throw std::invalid_argument(msg.str());
}

Tensor make(Mat value, std::vector<Tensor> parents, Backward backward) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->leaf = false;
    bool req = false;
    if (g_grad_enabled)
        for (const auto& p : parents) req = req || p.requires_grad();
    if (req) {
        n->requires_grad = true;
        n->parents = std::move(parents);
        n->backward = std::move(backward);
    }
    return Tensor(std::move(n));
}

Tensor block(const Tensor& a, Eigen::Index r0, Eigen::Index c0, Eigen::Index nr, Eigen::Index nc) {
    if (r0 < 0 || c0 < 0 || nr < 0 || nc < 0 || r0 + nr > a.rows() || c0 + nc > a.cols())
        throw std::out_of_range("block out of range");
    const Eigen::Index ar = a.rows(), ac = a.cols();
    return make(a.value().block(r0, c0, nr, nc), {a},
                [r0, c0, ar, ac](const Tensor&, const Tensor& g, const std::vector<bool>&) {
                    return std::vector<Tensor>{pad(g, r0, c0, ar, ac)};
                });
}

// Broadcast both operands to a common shape.
std::pair<Tensor, Tensor> align(const Tensor& a, const Tensor& b, const char* op) {
    if (a.rows() == b.rows() && a.cols() == b.cols()) return {a, b};
    auto dim = [&](Eigen::Index x, Eigen::Index y) -> Eigen::Index {
        if (x == y || y == 1) return x;
        if (x == 1) return y;
        shape_error(op, a, b);
    };
    const Eigen::Index r = dim(a.rows(), b.rows()), c = dim(a.cols(), b.cols());
    return {broadcast_to(a, r, c), broadcast_to(b, r, c)};
}

template <class F, class D>
Tensor unary(const Tensor& a, F f, D d) {
    return make(a.value().unaryExpr(f), {a}, [d](const Tensor& self, const Tensor& g, const std::vector<bool>&) {
        return std::vector<Tensor>{d(self, g)};
    });
}

}  // namespace

const Mat& Tensor::value() const {
    if (!node_) throw std::logic_error("use of an undefined tensor");
    return node_->value;
}

Mat& Tensor::mutable_value() {
    if (!node_ || !node_->leaf) throw std::logic_error("mutable_value on a non-leaf tensor");
    return node_->value;
}

double Tensor::item() const {
    const Mat& v = value();
    if (v.rows() != 1 || v.cols() != 1) throw std::invalid_argument("item() needs a 1x1 tensor");
    return v(0, 0);
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

bool grad_enabled() { return g_grad_enabled; }
GradMode::GradMode(bool enabled) : prev_(g_grad_enabled) { g_grad_enabled = enabled; }
GradMode::~GradMode() { g_grad_enabled = prev_; }

Tensor constant(Mat v) { return leaf(std::move(v), false); }
Tensor constant(double v) { return leaf(Mat::Constant(1, 1, v), false); }

Tensor leaf(Mat v, bool requires_grad) {
    auto n = std::make_shared<Node>();
    n->value = std::move(v);
    n->requires_grad = requires_grad;
    return Tensor(std::move(n));
}

Tensor add(const Tensor& a0, const Tensor& b0) {
    auto [a, b] = align(a0, b0, "add");
    return make(a.value() + b.value(), {a, b}, [](const Tensor&, const Tensor& g, const std::vector<bool>&) {
        return std::vector<Tensor>{g, g};
    });
}

Tensor sub(const Tensor& a0, const Tensor& b0) {
    auto [a, b] = align(a0, b0, "sub");
    return make(a.value() - b.value(), {a, b}, [](const Tensor&, const Tensor& g, const std::vector<bool>& need) {
        return std::vector<Tensor>{g, need[1] ? neg(g) : Tensor()};
    });
}

Tensor mul(const Tensor& a0, const Tensor& b0) {
    auto [a, b] = align(a0, b0, "mul");
    return make(a.value().cwiseProduct(b.value()), {a, b},
                [a, b](const Tensor&, const Tensor& g, const std::vector<bool>& need) {
                    return std::vector<Tensor>{need[0] ? mul(g, b) : Tensor(), need[1] ? mul(g, a) : Tensor()};
                });
}

Tensor div(const Tensor& a0, const Tensor& b0) {
    auto [a, b] = align(a0, b0, "div");
    return make(a.value().cwiseQuotient(b.value()), {a, b},
                [a, b](const Tensor& self, const Tensor& g, const std::vector<bool>& need) {
                    return std::vector<Tensor>{need[0] ? div(g, b) : Tensor(),
                                               need[1] ? neg(div(mul(g, self), b)) : Tensor()};
                });
}

Tensor neg(const Tensor& a) {
    return make(-a.value(), {a}, [](const Tensor&, const Tensor& g, const std::vector<bool>&) {
        return std::vector<Tensor>{neg(g)};
    });
}

Tensor scale(const Tensor& a, double s) {
    return make(s * a.value(), {a}, [s](const Tensor&, const Tensor& g, const std::vector<bool>&) {
        return std::vector<Tensor>{scale(g, s)};
    });
}

Tensor add_scalar(const Tensor& a, double s) {
    return make(a.value().array() + s, {a}, [](const Tensor&, const Tensor& g, const std::vector<bool>&) {
        return std::vector<Tensor>{g};
    });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.rows()) shape_error("matmul", a, b);
    Mat v;
    v.noalias() = a.value() * b.value();
    return make(std::move(v), {a, b}, [a, b](const Tensor&, const Tensor& g, const std::vector<bool>& need) {
        return std::vector<Tensor>{need[0] ? matmul(g, transpose(b)) : Tensor(),
                                   need[1] ? matmul_tn(a, g) : Tensor()};
    });
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
    if (a.rows() != b.rows()) shape_error("matmul_tn", a, b);
    Mat v;
    v.noalias() = a.value().transpose() * b.value();
    return make(std::move(v), {a, b}, [a, b](const Tensor&, const Tensor& g, const std::vector<bool>& need) {
        return std::vector<Tensor>{need[0] ? matmul(b, transpose(g)) : Tensor(), need[1] ? matmul(a, g) : Tensor()};
    });
}

Tensor transpose(const Tensor& a) {
    return make(a.value().transpose(), {a}, [](const Tensor&, const Tensor& g, const std::vector<bool>&) {
        return std::vector<Tensor>{transpose(g)};
    });
}

Tensor tanh(const Tensor& a) {
    return unary(a, [](double x) { return std::tanh(x); },
                 [](const Tensor& y, const Tensor& g) { return mul(g, 1.0 - square(y)); });
}

Tensor exp(const Tensor& a) {
    return unary(a, [](double x) { return std::exp(x); }, [](const Tensor& y, const Tensor& g) { return mul(g, y); });
}

Tensor log(const Tensor& a) {
    return unary(a, [](double x) { return std::log(x); }, [a](const Tensor&, const Tensor& g) { return div(g, a); });
}

Tensor sin(const Tensor& a) {
    return unary(a, [](double x) { return std::sin(x); },
                 [a](const Tensor&, const Tensor& g) { return mul(g, cos(a)); });
}

Tensor cos(const Tensor& a) {
    return unary(a, [](double x) { return std::cos(x); },
                 [a](const Tensor&, const Tensor& g) { return neg(mul(g, sin(a))); });
}

Tensor sqrt(const Tensor& a) {
    return unary(a, [](double x) { return std::sqrt(x); },
                 [](const Tensor& y, const Tensor& g) { return div(scale(g, 0.5), y); });
}

Tensor square(const Tensor& a) {
    return unary(a, [](double x) { return x * x; },
                 [a](const Tensor&, const Tensor& g) { return mul(g, scale(a, 2.0)); });
}

Tensor pow(const Tensor& a, double p) {
    if (p == 2.0) return square(a);
    if (p == 1.0) return a;
    return unary(a, [p](double x) { return std::pow(x, p); },
                 [a, p](const Tensor&, const Tensor& g) { return mul(g, scale(pow(a, p - 1.0), p)); });
}

Tensor sum(const Tensor& a) {
    const Eigen::Index r = a.rows(), c = a.cols();
    return make(Mat::Constant(1, 1, a.value().sum()), {a},
                [r, c](const Tensor&, const Tensor& g, const std::vector<bool>&) {
                    return std::vector<Tensor>{broadcast_to(g, r, c)};
                });
}

Tensor mean(const Tensor& a) {
    const double n = static_cast<double>(a.value().size());
    if (n == 0) throw std::invalid_argument("mean of an empty tensor");
    return scale(sum(a), 1.0 / n);
}

Tensor broadcast_to(const Tensor& a, Eigen::Index r, Eigen::Index c) {
    const Eigen::Index ar = a.rows(), ac = a.cols();
    if (ar == r && ac == c) return a;
    if ((ar != r && ar != 1) || (ac != c && ac != 1)) {
        std::ostringstream msg;
        msg << "broadcast_to: cannot expand " << ar << "x" << ac << " to " << r << "x" << c;
        throw std::invalid_argument(msg.str());
    }
    Mat v;
    if (ar == 1 && ac == 1)
        v = Mat::Constant(r, c, a.value()(0, 0));
    else if (ar == 1)
        v = a.value().replicate(r, 1);
    else
        v = a.value().replicate(1, c);
    return make(std::move(v), {a}, [ar, ac](const Tensor&, const Tensor& g, const std::vector<bool>&) {
        return std::vector<Tensor>{reduce_to(g, ar, ac)};
    });
}

Tensor reduce_to(const Tensor& a, Eigen::Index r, Eigen::Index c) {
    const Eigen::Index ar = a.rows(), ac = a.cols();
    if (ar == r && ac == c) return a;
    if ((r != ar && r != 1) || (c != ac && c != 1)) {
        std::ostringstream msg;
        msg << "reduce_to: cannot reduce " << ar << "x" << ac << " to " << r << "x" << c;
        throw std::invalid_argument(msg.str());
    }
    Mat v;
    if (r == 1 && c == 1)
        v = Mat::Constant(1, 1, a.value().sum());
    else if (r == 1)
        v = a.value().colwise().sum();
    else
        v = a.value().rowwise().sum();
    return make(std::move(v), {a}, [ar, ac](const Tensor&, const Tensor& g, const std::vector<bool>&) {
        return std::vector<Tensor>{broadcast_to(g, ar, ac)};
    });
}

Tensor slice_cols(const Tensor& a, Eigen::Index start, Eigen::Index count) {
    if (start == 0 && count == a.cols()) return a;
    return block(a, 0, start, a.rows(), count);
}

Tensor slice_rows(const Tensor& a, Eigen::Index start, Eigen::Index count) {
    if (start == 0 && count == a.rows()) return a;
    return block(a, start, 0, count, a.cols());
}

Tensor pad(const Tensor& a, Eigen::Index r0, Eigen::Index c0, Eigen::Index rows, Eigen::Index cols) {
    if (r0 < 0 || c0 < 0 || r0 + a.rows() > rows || c0 + a.cols() > cols) throw std::out_of_range("pad out of range");
    Mat v = Mat::Zero(rows, cols);
    v.block(r0, c0, a.rows(), a.cols()) = a.value();
    const Eigen::Index nr = a.rows(), nc = a.cols();
    return make(std::move(v), {a}, [r0, c0, nr, nc](const Tensor&, const Tensor& g, const std::vector<bool>&) {
        return std::vector<Tensor>{block(g, r0, c0, nr, nc)};
    });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_cols: no parts");
    const Eigen::Index r = parts[0].rows();
    Eigen::Index c = 0;
    for (const auto& p : parts) {
        if (p.rows() != r) shape_error("concat_cols", parts[0], p);
        c += p.cols();
    }
    Mat v(r, c);
    std::vector<Eigen::Index> offs;
    Eigen::Index o = 0;
    for (const auto& p : parts) {
        v.middleCols(o, p.cols()) = p.value();
        offs.push_back(o);
        o += p.cols();
    }
    std::vector<Eigen::Index> widths;
    for (const auto& p : parts) widths.push_back(p.cols());
    return make(std::move(v), parts, [offs, widths](const Tensor&, const Tensor& g, const std::vector<bool>& need) {
        std::vector<Tensor> out(offs.size());
        for (std::size_t k = 0; k < offs.size(); ++k)
            if (need[k]) out[k] = slice_cols(g, offs[k], widths[k]);
        return out;
    });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_rows: no parts");
    const Eigen::Index c = parts[0].cols();
    Eigen::Index r = 0;
    for (const auto& p : parts) {
        if (p.cols() != c) shape_error("concat_rows", parts[0], p);
        r += p.rows();
    }
    Mat v(r, c);
    std::vector<Eigen::Index> offs, heights;
    Eigen::Index o = 0;
    for (const auto& p : parts) {
        v.middleRows(o, p.rows()) = p.value();
        offs.push_back(o);
        heights.push_back(p.rows());
        o += p.rows();
    }
    return make(std::move(v), parts, [offs, heights](const Tensor&, const Tensor& g, const std::vector<bool>& need) {
        std::vector<Tensor> out(offs.size());
        for (std::size_t k = 0; k < offs.size(); ++k)
            if (need[k]) out[k] = slice_rows(g, offs[k], heights[k]);
        return out;
    });
}

Tensor gather_rows(const Tensor& a, const std::vector<Eigen::Index>& idx) {
    Mat v(static_cast<Eigen::Index>(idx.size()), a.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] < 0 || idx[i] >= a.rows()) throw std::out_of_range("gather_rows index out of range");
        v.row(static_cast<Eigen::Index>(i)) = a.value().row(idx[i]);
    }
    const Eigen::Index n = a.rows();
    return make(std::move(v), {a}, [idx, n](const Tensor&, const Tensor& g, const std::vector<bool>&) {
        return std::vector<Tensor>{scatter_rows(g, idx, n)};
    });
}

Tensor scatter_rows(const Tensor& a, const std::vector<Eigen::Index>& idx, Eigen::Index rows) {
    if (static_cast<Eigen::Index>(idx.size()) != a.rows()) throw std::invalid_argument("scatter_rows: index length");
    Mat v = Mat::Zero(rows, a.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] < 0 || idx[i] >= rows) throw std::out_of_range("scatter_rows index out of range");
        v.row(idx[i]) += a.value().row(static_cast<Eigen::Index>(i));
    }
    return make(std::move(v), {a}, [idx](const Tensor&, const Tensor& g, const std::vector<bool>&) {
        return std::vector<Tensor>{gather_rows(g, idx)};
    });
}

Tensor reshape(const Tensor& a, Eigen::Index r, Eigen::Index c) {
    if (r * c != a.value().size()) throw std::invalid_argument("reshape: element count changes");
    const Eigen::Index ar = a.rows(), ac = a.cols();
    if (ar == r && ac == c) return a;
    Mat v;
    if (ac == 1 || ar == 1) {
        // Row-major and column-major reads agree for vectors.
        v = Eigen::Map<const RowMat>(a.value().data(), r, c);
    } else {
        RowMat tmp = a.value();
        v = Eigen::Map<const RowMat>(tmp.data(), r, c);
    }
    return make(std::move(v), {a}, [ar, ac](const Tensor&, const Tensor& g, const std::vector<bool>&) {
        return std::vector<Tensor>{reshape(g, ar, ac)};
    });
}

std::vector<Tensor> grad(const std::vector<Tensor>& outputs, const std::vector<Tensor>& inputs,
                         const std::vector<Tensor>& grad_outputs, bool create_graph) {
    if (!grad_outputs.empty() && grad_outputs.size() != outputs.size())
        throw std::invalid_argument("grad: grad_outputs must match outputs");

    // Post-order over nodes that require grad; parents come before children.
    std::vector<Node*> order;
    std::unordered_map<Node*, int> state;  // 1 visiting, 2 done
    std::vector<std::pair<Node*, std::size_t>> stack;
    for (const auto& out : outputs) {
        if (!out.requires_grad() || state.count(out.node())) continue;
        stack.emplace_back(out.node(), 0);
        state[out.node()] = 1;
        while (!stack.empty()) {
            auto& [n, k] = stack.back();
            if (k < n->parents.size()) {
                Node* p = n->parents[k++].node();
                if (p && p->requires_grad && !state.count(p)) {
                    state[p] = 1;
                    stack.emplace_back(p, 0);
                }
            } else {
                state[n] = 2;
                order.push_back(n);
                stack.pop_back();
            }
        }
    }

    std::unordered_map<Node*, bool> needed;
    for (const auto& in : inputs)
        if (in.defined()) needed[in.node()] = true;
    for (Node* n : order) {
        if (needed.count(n)) continue;
        bool any = false;
        for (const auto& p : n->parents) any = any || (p.requires_grad() && needed[p.node()]);
        needed[n] = any;
    }

    GradMode mode(create_graph);
    std::unordered_map<Node*, Tensor> grads;
    auto accumulate = [&grads](Node* n, const Tensor& g) {
        auto it = grads.find(n);
        if (it == grads.end())
            grads.emplace(n, g);
        else
            it->second = add(it->second, g);
    };
    for (std::size_t k = 0; k < outputs.size(); ++k) {
        const Tensor& out = outputs[k];
        if (!out.requires_grad()) continue;
        Tensor seed = grad_outputs.empty() || !grad_outputs[k].defined()
                          ? constant(Mat::Ones(out.rows(), out.cols()))
                          : grad_outputs[k];
        if (seed.rows() != out.rows() || seed.cols() != out.cols()) shape_error("grad seed", out, seed);
        accumulate(out.node(), seed);
    }

    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->leaf || !needed[n]) continue;
        auto git = grads.find(n);
        if (git == grads.end()) continue;
        std::vector<bool> need(n->parents.size());
        for (std::size_t k = 0; k < need.size(); ++k)
            need[k] = n->parents[k].requires_grad() && needed[n->parents[k].node()];
        Tensor self(n->shared_from_this());
        const Tensor g = git->second;
        std::vector<Tensor> pg = n->backward(self, g, need);
        for (std::size_t k = 0; k < pg.size(); ++k)
            if (need[k] && pg[k].defined()) accumulate(n->parents[k].node(), pg[k]);
    }

    std::vector<Tensor> result;
    result.reserve(inputs.size());
    for (const auto& in : inputs) {
        auto it = in.defined() ? grads.find(in.node()) : grads.end();
        if (it != grads.end())
            result.push_back(it->second);
        else
            result.push_back(constant(Mat::Zero(in.rows(), in.cols())));
    }
    return result;
}

}  // namespace qpinn::ad
