#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "gnfbc/graph.hpp"
#include "gnfbc/matrix.hpp"

namespace gnfbc {

/// Handle into a Tape node.
struct Value {
    std::uint32_t id = UINT32_MAX;
    bool valid() const { return id != UINT32_MAX; }
};

/// Fixed neighborhood sparsity used by the attention ops: row i lists
/// N(i) followed by i itself, sorted ascending.
struct AdjStructure {
    std::size_t num_nodes = 0;
    std::vector<std::size_t> offsets;
    std::vector<std::uint32_t> col;

    static AdjStructure with_self_loops(const SparseGraph& g);
    static AdjStructure self_only(std::size_t n);

    std::size_t entries() const { return col.size(); }
};

/// Reverse-mode tape over dense matrices. Built fresh for every forward
/// pass; operations record a backward rule as they execute. Single
/// threaded by design so fixed-seed runs are bit-reproducible.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Constant input (no gradient tracked).
    Value leaf(DenseMatrix m);
    /// Trainable parameter (gradient tracked).
    Value param(DenseMatrix m);

    Value matmul(Value a, Value b);
    /// out = fwd * h. bwd must be the transpose of fwd (pass the same
    /// matrix when it is symmetric).
    Value spmm(std::shared_ptr<const SparseMatrix> fwd,
               std::shared_ptr<const SparseMatrix> bwd, Value h);
    Value add(Value a, Value b);
    Value sub(Value a, Value b);
    Value hadamard(Value a, Value b);
    Value scale(Value a, double c);
    Value relu(Value a);
    Value leaky_relu(Value a, double slope);
    Value softmax_rows(Value a);
    Value sum_all(Value a);

    /// Row-wise convex blend: out_i = (1-beta_i)*a_i + beta_i*b_i.
    /// With relu_inputs the branches are rectified first, fusing the common
    /// activation-then-blend sequence into a single node.
    Value blend_rows(Value a, Value b, std::shared_ptr<const std::vector<double>> beta,
                     bool relu_inputs = false);

    /// Mean over masked nodes of -log p[i, y_i], p clamped to >= 1e-12.
    Value cross_entropy(Value probs, Labels labels, Mask mask);

    /// Mean over masked nodes of the squared row distance to target.
    Value mse_loss(Value pred, std::shared_ptr<const DenseMatrix> target, Mask mask);

    /// sum_{i in set} beta_i * sum_{j in N(i)} ||pred_i - pred_j||^2.
    Value neighbor_penalty(Value pred, std::shared_ptr<const SparseGraph> g,
                           std::shared_ptr<const std::vector<double>> beta,
                           std::shared_ptr<const Mask> node_set);

    /// Edge score vector e_k = s_self[i(k)] + s_neigh[col(k)] over the
    /// structure's entries, as an entries x 1 value.
    Value gather_edge_scores(Value s_self, Value s_neigh,
                             std::shared_ptr<const AdjStructure> st);

    /// Softmax within each structure row over an entries x 1 value.
    Value segment_softmax(Value e, std::shared_ptr<const AdjStructure> st);

    /// out_i = sum_{k in row i} alpha_k * h[col(k), :].
    Value weighted_neighbor_sum(Value alpha, Value h,
                                std::shared_ptr<const AdjStructure> st);

    /// Propagates d loss / d node into every gradient buffer. loss must be
    /// the scalar final node of the tape; calling twice without zero_grad
    /// throws.
    void backward(Value loss);
    void zero_grad();

    const DenseMatrix& value(Value v) const { return nodes_[v.id].value; }
    const DenseMatrix& grad(Value v) { return grad_mut(v); }
    bool requires_grad(Value v) const { return nodes_[v.id].requires_grad; }

    std::size_t node_count() const { return nodes_.size(); }
    std::size_t last_backward_visits() const { return last_visits_; }

    /// Per-op-kind node counts; used by tests that pin which operations a
    /// given forward pass may execute.
    std::map<std::string, std::size_t> op_counts() const;

private:
    struct Node {
        DenseMatrix value;
        DenseMatrix grad;
        std::function<void(Tape&)> backward;
        bool requires_grad = false;
        const char* op = "leaf";
    };

    Value push(DenseMatrix value, bool requires_grad, const char* op,
               std::function<void(Tape&)> backward);
    // Gradient buffers materialize on first touch so pure-inference tapes
    // never pay for them; an untouched buffer reads as a zero matrix.
    DenseMatrix& grad_mut(Value v) {
        Node& node = nodes_[v.id];
        if (node.grad.size() == 0 && node.value.size() != 0) {
            node.grad = DenseMatrix(node.value.rows(), node.value.cols(), 0.0);
        }
        return node.grad;
    }
    bool grad_untouched(Value v) const { return nodes_[v.id].grad.size() == 0; }

    std::vector<Node> nodes_;
    bool backward_ran_ = false;
    std::size_t last_visits_ = 0;
};

} // namespace gnfbc
