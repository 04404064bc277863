#pragma once
// Reverse-mode differentiation over dense matrices. Backward rules are written
// with the same differentiable ops, so a gradient computed with create_graph
// can itself be differentiated (needed for second input derivatives and for
// parameter gradients of derivative terms).

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

namespace qpinn::ad {

using Mat = Eigen::MatrixXd;

struct Node;

class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::shared_ptr<Node> n) : node_(std::move(n)) {}

    const Mat& value() const;
    Mat& mutable_value();  // leaves only; used to load parameters in place
    Eigen::Index rows() const { return value().rows(); }
    Eigen::Index cols() const { return value().cols(); }
    double item() const;   // value of a 1x1 tensor
    bool requires_grad() const;
    bool defined() const { return static_cast<bool>(node_); }
    Node* node() const { return node_.get(); }
    const std::shared_ptr<Node>& ptr() const { return node_; }

private:
    std::shared_ptr<Node> node_;
};

using Backward = std::function<std::vector<Tensor>(const Tensor& self, const Tensor& g,
                                                   const std::vector<bool>& need)>;

struct Node : std::enable_shared_from_this<Node> {
    Mat value;
    bool requires_grad = false;
    bool leaf = true;
    std::vector<Tensor> parents;
    Backward backward;
};

// Graph recording switch, thread local. NoGrad disables it for a scope.
bool grad_enabled();
class GradMode {
public:
    explicit GradMode(bool enabled);
    ~GradMode();
    GradMode(const GradMode&) = delete;
    GradMode& operator=(const GradMode&) = delete;

private:
    bool prev_;
};
struct NoGrad : GradMode {
    NoGrad() : GradMode(false) {}
};

Tensor constant(Mat v);
Tensor constant(double v);
Tensor leaf(Mat v, bool requires_grad = true);

// Elementwise binary ops broadcast 1x1, 1xc and rx1 operands.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor neg(const Tensor& a);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor matmul_tn(const Tensor& a, const Tensor& b);  // a^T b without forming a^T
Tensor transpose(const Tensor& a);

Tensor tanh(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor sin(const Tensor& a);
Tensor cos(const Tensor& a);
Tensor sqrt(const Tensor& a);
Tensor square(const Tensor& a);
Tensor pow(const Tensor& a, double p);

Tensor sum(const Tensor& a);            // 1x1
Tensor mean(const Tensor& a);           // 1x1
Tensor broadcast_to(const Tensor& a, Eigen::Index r, Eigen::Index c);
Tensor reduce_to(const Tensor& a, Eigen::Index r, Eigen::Index c);  // sums the broadcast axes

Tensor slice_cols(const Tensor& a, Eigen::Index start, Eigen::Index count);
Tensor slice_rows(const Tensor& a, Eigen::Index start, Eigen::Index count);
Tensor pad(const Tensor& a, Eigen::Index r0, Eigen::Index c0, Eigen::Index rows, Eigen::Index cols);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor gather_rows(const Tensor& a, const std::vector<Eigen::Index>& idx);
Tensor scatter_rows(const Tensor& a, const std::vector<Eigen::Index>& idx, Eigen::Index rows);
// Reads a in row-major order and refills an r x c matrix in row-major order.
Tensor reshape(const Tensor& a, Eigen::Index r, Eigen::Index c);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator/(const Tensor& a, const Tensor& b) { return div(a, b); }
inline Tensor operator-(const Tensor& a) { return neg(a); }
inline Tensor operator*(double s, const Tensor& a) { return scale(a, s); }
inline Tensor operator*(const Tensor& a, double s) { return scale(a, s); }
inline Tensor operator+(const Tensor& a, double s) { return add_scalar(a, s); }
inline Tensor operator+(double s, const Tensor& a) { return add_scalar(a, s); }
inline Tensor operator-(const Tensor& a, double s) { return add_scalar(a, -s); }
inline Tensor operator-(double s, const Tensor& a) { return add_scalar(neg(a), s); }
inline Tensor operator/(const Tensor& a, double s) { return scale(a, 1.0 / s); }

// Gradients of sum_k <grad_outputs[k], outputs[k]> with respect to inputs.
// Missing grad_outputs default to ones. Unreachable inputs get zeros.
std::vector<Tensor> grad(const std::vector<Tensor>& outputs, const std::vector<Tensor>& inputs,
                         const std::vector<Tensor>& grad_outputs = {}, bool create_graph = false);

}  // namespace qpinn::ad
