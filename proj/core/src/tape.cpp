#include "gnfbc/tape.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "gnfbc/errors.hpp"

namespace gnfbc {

namespace {

constexpr double kLogClamp = 1e-12;

void matmul_into(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& out) {
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    out = DenseMatrix(m, n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        double* dst = out.row(i);
        const double* arow = a.row(i);
        for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0) continue;
            const double* brow = b.row(p);
            for (std::size_t j = 0; j < n; ++j) dst[j] += av * brow[j];
        }
    }
}

// grad_a += g * b^T
void accum_grad_a(const DenseMatrix& g, const DenseMatrix& b, DenseMatrix& ga) {
    const std::size_t m = g.rows(), n = g.cols(), k = b.rows();
    for (std::size_t i = 0; i < m; ++i) {
        const double* grow = g.row(i);
        double* dst = ga.row(i);
        for (std::size_t p = 0; p < k; ++p) {
            const double* brow = b.row(p);
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
            dst[p] += acc;
        }
    }
}

// grad_b += a^T * g
void accum_grad_b(const DenseMatrix& a, const DenseMatrix& g, DenseMatrix& gb) {
    const std::size_t m = a.rows(), k = a.cols(), n = g.cols();
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a.row(i);
        const double* grow = g.row(i);
        for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0) continue;
            double* dst = gb.row(p);
            for (std::size_t j = 0; j < n; ++j) dst[j] += av * grow[j];
        }
    }
}

void spmm_accum(const SparseMatrix& m, const DenseMatrix& h, DenseMatrix& out) {
    const std::size_t d = h.cols();
    for (std::size_t r = 0; r < m.rows; ++r) {
        double* dst = out.row(r);
        for (std::size_t k = m.offsets[r]; k < m.offsets[r + 1]; ++k) {
            const double w = m.val[k];
            const double* src = h.row(m.col[k]);
            for (std::size_t c = 0; c < d; ++c) dst[c] += w * src[c];
        }
    }
}

void require_same_shape(const DenseMatrix& a, const DenseMatrix& b, const char* op) {
    if (!a.same_shape(b)) {
        throw DimensionError(std::string(op) + ": shapes differ, " + shape_str(a) + " vs " + shape_str(b));
    }
}

} // namespace

AdjStructure AdjStructure::with_self_loops(const SparseGraph& g) {
    AdjStructure st;
    st.num_nodes = g.num_nodes();
    st.offsets.assign(st.num_nodes + 1, 0);
    for (std::size_t i = 0; i < st.num_nodes; ++i) {
        st.offsets[i + 1] = st.offsets[i] + g.degree(i) + 1;
    }
    st.col.resize(st.offsets[st.num_nodes]);
    for (std::size_t i = 0; i < st.num_nodes; ++i) {
        std::size_t k = st.offsets[i];
        bool self_written = false;
        for (std::uint32_t j : g.neighbors(i)) {
            if (!self_written && j > i) {
                st.col[k++] = static_cast<std::uint32_t>(i);
                self_written = true;
            }
            st.col[k++] = j;
        }
        if (!self_written) st.col[k] = static_cast<std::uint32_t>(i);
    }
    return st;
}

AdjStructure AdjStructure::self_only(std::size_t n) {
    AdjStructure st;
    st.num_nodes = n;
    st.offsets.resize(n + 1);
    st.col.resize(n);
    for (std::size_t i = 0; i <= n; ++i) st.offsets[i] = i;
    for (std::size_t i = 0; i < n; ++i) st.col[i] = static_cast<std::uint32_t>(i);
    return st;
}

Value Tape::push(DenseMatrix value, bool requires_grad, const char* op,
                 std::function<void(Tape&)> backward) {
    Node node;
    node.value = std::move(value);
    node.requires_grad = requires_grad;
    node.op = op;
    node.backward = std::move(backward);
    nodes_.push_back(std::move(node));
    return Value{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Value Tape::leaf(DenseMatrix m) { return push(std::move(m), false, "leaf", {}); }

Value Tape::param(DenseMatrix m) { return push(std::move(m), true, "param", {}); }

Value Tape::matmul(Value a, Value b) {
    const DenseMatrix& av = value(a);
    const DenseMatrix& bv = value(b);
    if (av.cols() != bv.rows()) {
        throw DimensionError("matmul: inner dimensions differ, " + shape_str(av) +
                             " vs " + shape_str(bv));
    }
    DenseMatrix out;
    matmul_into(av, bv, out);
    const bool rg = requires_grad(a) || requires_grad(b);
    Value v = push(std::move(out), rg, "matmul", {});
    if (rg) {
        nodes_[v.id].backward = [a, b, v](Tape& t) {
            const DenseMatrix& g = t.grad(v);
            if (t.requires_grad(a)) accum_grad_a(g, t.value(b), t.grad_mut(a));
            if (t.requires_grad(b)) accum_grad_b(t.value(a), g, t.grad_mut(b));
        };
    }
    return v;
}

Value Tape::spmm(std::shared_ptr<const SparseMatrix> fwd,
                 std::shared_ptr<const SparseMatrix> bwd, Value h) {
    const DenseMatrix& hv = value(h);
    if (hv.rows() != fwd->cols) {
        throw DimensionError("spmm: sparse expects " + std::to_string(fwd->cols) +
                             " rows, dense has " + std::to_string(hv.rows()));
    }
    DenseMatrix out;
    fwd->multiply(hv, out);
    const bool rg = requires_grad(h);
    Value v = push(std::move(out), rg, "spmm", {});
    if (rg) {
        nodes_[v.id].backward = [bwd, h, v](Tape& t) {
            spmm_accum(*bwd, t.grad(v), t.grad_mut(h));
        };
    }
    return v;
}

Value Tape::add(Value a, Value b) {
    const DenseMatrix& av = value(a);
    const DenseMatrix& bv = value(b);
    require_same_shape(av, bv, "add");
    DenseMatrix out = av;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += bv.data()[i];
    const bool rg = requires_grad(a) || requires_grad(b);
    Value v = push(std::move(out), rg, "add", {});
    if (rg) {
        nodes_[v.id].backward = [a, b, v](Tape& t) {
            const DenseMatrix& g = t.grad(v);
            if (t.requires_grad(a)) {
                DenseMatrix& ga = t.grad_mut(a);
                for (std::size_t i = 0; i < g.size(); ++i) ga.data()[i] += g.data()[i];
            }
            if (t.requires_grad(b)) {
                DenseMatrix& gb = t.grad_mut(b);
                for (std::size_t i = 0; i < g.size(); ++i) gb.data()[i] += g.data()[i];
            }
        };
    }
    return v;
}

Value Tape::sub(Value a, Value b) {
    const DenseMatrix& av = value(a);
    const DenseMatrix& bv = value(b);
    require_same_shape(av, bv, "sub");
    DenseMatrix out = av;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] -= bv.data()[i];
    const bool rg = requires_grad(a) || requires_grad(b);
    Value v = push(std::move(out), rg, "sub", {});
    if (rg) {
        nodes_[v.id].backward = [a, b, v](Tape& t) {
            const DenseMatrix& g = t.grad(v);
            if (t.requires_grad(a)) {
                DenseMatrix& ga = t.grad_mut(a);
                for (std::size_t i = 0; i < g.size(); ++i) ga.data()[i] += g.data()[i];
            }
            if (t.requires_grad(b)) {
                DenseMatrix& gb = t.grad_mut(b);
                for (std::size_t i = 0; i < g.size(); ++i) gb.data()[i] -= g.data()[i];
            }
        };
    }
    return v;
}

Value Tape::hadamard(Value a, Value b) {
    const DenseMatrix& av = value(a);
    const DenseMatrix& bv = value(b);
    require_same_shape(av, bv, "hadamard");
    DenseMatrix out = av;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= bv.data()[i];
    const bool rg = requires_grad(a) || requires_grad(b);
    Value v = push(std::move(out), rg, "hadamard", {});
    if (rg) {
        nodes_[v.id].backward = [a, b, v](Tape& t) {
            const DenseMatrix& g = t.grad(v);
            if (t.requires_grad(a)) {
                DenseMatrix& ga = t.grad_mut(a);
                const DenseMatrix& bv2 = t.value(b);
                for (std::size_t i = 0; i < g.size(); ++i) ga.data()[i] += g.data()[i] * bv2.data()[i];
            }
            if (t.requires_grad(b)) {
                DenseMatrix& gb = t.grad_mut(b);
                const DenseMatrix& av2 = t.value(a);
                for (std::size_t i = 0; i < g.size(); ++i) gb.data()[i] += g.data()[i] * av2.data()[i];
            }
        };
    }
    return v;
}

Value Tape::scale(Value a, double c) {
    DenseMatrix out = value(a);
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= c;
    const bool rg = requires_grad(a);
    Value v = push(std::move(out), rg, "scale", {});
    if (rg) {
        nodes_[v.id].backward = [a, c, v](Tape& t) {
            const DenseMatrix& g = t.grad(v);
            DenseMatrix& ga = t.grad_mut(a);
            for (std::size_t i = 0; i < g.size(); ++i) ga.data()[i] += c * g.data()[i];
        };
    }
    return v;
}

Value Tape::relu(Value a) {
    DenseMatrix out = value(a);
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = std::max(0.0, out.data()[i]);
    const bool rg = requires_grad(a);
    Value v = push(std::move(out), rg, "relu", {});
    if (rg) {
        nodes_[v.id].backward = [a, v](Tape& t) {
            const DenseMatrix& g = t.grad(v);
            const DenseMatrix& x = t.value(a);
            DenseMatrix& ga = t.grad_mut(a);
            // subgradient at 0 pinned to 0
            for (std::size_t i = 0; i < g.size(); ++i) {
                if (x.data()[i] > 0.0) ga.data()[i] += g.data()[i];
            }
        };
    }
    return v;
}

Value Tape::leaky_relu(Value a, double slope) {
    DenseMatrix out = value(a);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double x = out.data()[i];
        out.data()[i] = x > 0.0 ? x : slope * x;
    }
    const bool rg = requires_grad(a);
    Value v = push(std::move(out), rg, "leaky_relu", {});
    if (rg) {
        nodes_[v.id].backward = [a, slope, v](Tape& t) {
            const DenseMatrix& g = t.grad(v);
            const DenseMatrix& x = t.value(a);
            DenseMatrix& ga = t.grad_mut(a);
            for (std::size_t i = 0; i < g.size(); ++i) {
                ga.data()[i] += (x.data()[i] > 0.0 ? 1.0 : slope) * g.data()[i];
            }
        };
    }
    return v;
}

Value Tape::softmax_rows(Value a) {
    const DenseMatrix& x = value(a);
    DenseMatrix out(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const double* src = x.row(i);
        double* dst = out.row(i);
        double mx = src[0];
        for (std::size_t j = 1; j < x.cols(); ++j) mx = std::max(mx, src[j]);
        double denom = 0.0;
        for (std::size_t j = 0; j < x.cols(); ++j) {
            dst[j] = std::exp(src[j] - mx);
            denom += dst[j];
        }
        for (std::size_t j = 0; j < x.cols(); ++j) dst[j] /= denom;
    }
    const bool rg = requires_grad(a);
    Value v = push(std::move(out), rg, "softmax_rows", {});
    if (rg) {
        nodes_[v.id].backward = [a, v](Tape& t) {
            const DenseMatrix& g = t.grad(v);
            const DenseMatrix& y = t.value(v);
            DenseMatrix& ga = t.grad_mut(a);
            for (std::size_t i = 0; i < y.rows(); ++i) {
                const double* yr = y.row(i);
                const double* gr = g.row(i);
                double dot = 0.0;
                for (std::size_t j = 0; j < y.cols(); ++j) dot += yr[j] * gr[j];
                double* dst = ga.row(i);
                for (std::size_t j = 0; j < y.cols(); ++j) dst[j] += yr[j] * (gr[j] - dot);
            }
        };
    }
    return v;
}

Value Tape::sum_all(Value a) {
    const DenseMatrix& x = value(a);
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x.data()[i];
    DenseMatrix out(1, 1, s);
    const bool rg = requires_grad(a);
    Value v = push(std::move(out), rg, "sum_all", {});
    if (rg) {
        nodes_[v.id].backward = [a, v](Tape& t) {
            const double g = t.grad(v)(0, 0);
            DenseMatrix& ga = t.grad_mut(a);
            for (std::size_t i = 0; i < ga.size(); ++i) ga.data()[i] += g;
        };
    }
    return v;
}

Value Tape::blend_rows(Value a, Value b, std::shared_ptr<const std::vector<double>> beta,
                       bool relu_inputs) {
    const DenseMatrix& av = value(a);
    const DenseMatrix& bv = value(b);
    require_same_shape(av, bv, "blend_rows");
    if (beta->size() != av.rows()) {
        throw DimensionError("blend_rows: beta has " + std::to_string(beta->size()) +
                             " entries for " + std::to_string(av.rows()) + " rows");
    }
    DenseMatrix out(av.rows(), av.cols());
    for (std::size_t i = 0; i < av.rows(); ++i) {
        const double bi = (*beta)[i];
        const double* ar = av.row(i);
        const double* br = bv.row(i);
        double* dst = out.row(i);
        if (relu_inputs) {
            for (std::size_t j = 0; j < av.cols(); ++j) {
                dst[j] = (1.0 - bi) * std::max(0.0, ar[j]) + bi * std::max(0.0, br[j]);
            }
        } else {
            for (std::size_t j = 0; j < av.cols(); ++j) dst[j] = (1.0 - bi) * ar[j] + bi * br[j];
        }
    }
    const bool rg = requires_grad(a) || requires_grad(b);
    Value v = push(std::move(out), rg, "blend_rows", {});
    if (rg) {
        nodes_[v.id].backward = [a, b, beta, relu_inputs, v](Tape& t) {
            const DenseMatrix& g = t.grad(v);
            const DenseMatrix& av = t.value(a);
            const DenseMatrix& bv = t.value(b);
            const bool ra = t.requires_grad(a);
            const bool rb = t.requires_grad(b);
            for (std::size_t i = 0; i < g.rows(); ++i) {
                const double bi = (*beta)[i];
                const double* gr = g.row(i);
                if (ra) {
                    const double* ar = av.row(i);
                    double* dst = t.grad_mut(a).row(i);
                    // fused rectifier: subgradient at 0 pinned to 0, as in relu
                    for (std::size_t j = 0; j < g.cols(); ++j) {
                        if (!relu_inputs || ar[j] > 0.0) dst[j] += (1.0 - bi) * gr[j];
                    }
                }
                if (rb) {
                    const double* br = bv.row(i);
                    double* dst = t.grad_mut(b).row(i);
                    for (std::size_t j = 0; j < g.cols(); ++j) {
                        if (!relu_inputs || br[j] > 0.0) dst[j] += bi * gr[j];
                    }
                }
            }
        };
    }
    return v;
}

Value Tape::cross_entropy(Value probs, Labels labels, Mask mask) {
    const DenseMatrix& p = value(probs);
    if (mask.empty()) throw ValidationError("cross_entropy: empty mask");
    if (labels.size() != p.rows()) {
        throw DimensionError("cross_entropy: " + std::to_string(labels.size()) +
                             " labels for " + std::to_string(p.rows()) + " rows");
    }
    const int c = static_cast<int>(p.cols());
    double loss = 0.0;
    for (std::uint32_t i : mask) {
        if (i >= p.rows()) throw ValidationError("cross_entropy: mask index out of range");
        const int y = labels[i];
        if (y < 0 || y >= c) {
            throw ValidationError("cross_entropy: label " + std::to_string(y) +
                                  " out of range [0," + std::to_string(c) + ") at node " + std::to_string(i));
        }
        loss -= std::log(std::max(p(i, static_cast<std::size_t>(y)), kLogClamp));
    }
    loss /= static_cast<double>(mask.size());
    const bool rg = requires_grad(probs);
    Value v = push(DenseMatrix(1, 1, loss), rg, "cross_entropy", {});
    if (rg) {
        auto lab = std::make_shared<Labels>(std::move(labels));
        auto msk = std::make_shared<Mask>(std::move(mask));
        nodes_[v.id].backward = [probs, lab, msk, v](Tape& t) {
            const double g = t.grad(v)(0, 0);
            const DenseMatrix& p2 = t.value(probs);
            DenseMatrix& gp = t.grad_mut(probs);
            const double inv = 1.0 / static_cast<double>(msk->size());
            for (std::uint32_t i : *msk) {
                const auto y = static_cast<std::size_t>((*lab)[i]);
                const double pv = p2(i, y);
                if (pv >= kLogClamp) gp(i, y) -= g * inv / pv;
            }
        };
    }
    return v;
}

Value Tape::mse_loss(Value pred, std::shared_ptr<const DenseMatrix> target, Mask mask) {
    const DenseMatrix& p = value(pred);
    if (mask.empty()) throw ValidationError("mse_loss: empty mask");
    require_same_shape(p, *target, "mse_loss");
    double loss = 0.0;
    for (std::uint32_t i : mask) {
        const double* pr = p.row(i);
        const double* tr = target->row(i);
        for (std::size_t j = 0; j < p.cols(); ++j) {
            const double d = pr[j] - tr[j];
            loss += d * d;
        }
    }
    loss /= static_cast<double>(mask.size());
    const bool rg = requires_grad(pred);
    Value v = push(DenseMatrix(1, 1, loss), rg, "mse_loss", {});
    if (rg) {
        auto msk = std::make_shared<Mask>(std::move(mask));
        nodes_[v.id].backward = [pred, target, msk, v](Tape& t) {
            const double g = t.grad(v)(0, 0);
            const DenseMatrix& p2 = t.value(pred);
            DenseMatrix& gp = t.grad_mut(pred);
            const double s = 2.0 * g / static_cast<double>(msk->size());
            for (std::uint32_t i : *msk) {
                const double* pr = p2.row(i);
                const double* tr = target->row(i);
                double* dst = gp.row(i);
                for (std::size_t j = 0; j < p2.cols(); ++j) dst[j] += s * (pr[j] - tr[j]);
            }
        };
    }
    return v;
}

Value Tape::neighbor_penalty(Value pred, std::shared_ptr<const SparseGraph> g,
                             std::shared_ptr<const std::vector<double>> beta,
                             std::shared_ptr<const Mask> node_set) {
    const DenseMatrix& p = value(pred);
    if (p.rows() != g->num_nodes()) {
        throw DimensionError("neighbor_penalty: " + std::to_string(p.rows()) +
                             " prediction rows for " + std::to_string(g->num_nodes()) + " nodes");
    }
    if (beta->size() != g->num_nodes()) {
        throw DimensionError("neighbor_penalty: beta length mismatch");
    }
    double total = 0.0;
    for (std::uint32_t i : *node_set) {
        const double bi = (*beta)[i];
        const double* pi = p.row(i);
        double acc = 0.0;
        for (std::uint32_t j : g->neighbors(i)) {
            const double* pj = p.row(j);
            for (std::size_t c = 0; c < p.cols(); ++c) {
                const double d = pi[c] - pj[c];
                acc += d * d;
            }
        }
        total += bi * acc;
    }
    const bool rg = requires_grad(pred);
    Value v = push(DenseMatrix(1, 1, total), rg, "neighbor_penalty", {});
    if (rg) {
        nodes_[v.id].backward = [pred, g, beta, node_set, v](Tape& t) {
            const double gout = t.grad(v)(0, 0);
            const DenseMatrix& p2 = t.value(pred);
            DenseMatrix& gp = t.grad_mut(pred);
            for (std::uint32_t i : *node_set) {
                const double s = 2.0 * gout * (*beta)[i];
                const double* pi = p2.row(i);
                double* gi = gp.row(i);
                for (std::uint32_t j : g->neighbors(i)) {
                    const double* pj = p2.row(j);
                    double* gj = gp.row(j);
                    for (std::size_t c = 0; c < p2.cols(); ++c) {
                        const double d = s * (pi[c] - pj[c]);
                        gi[c] += d;
                        gj[c] -= d;
                    }
                }
            }
        };
    }
    return v;
}

Value Tape::gather_edge_scores(Value s_self, Value s_neigh,
                               std::shared_ptr<const AdjStructure> st) {
    const DenseMatrix& a = value(s_self);
    const DenseMatrix& b = value(s_neigh);
    if (a.cols() != 1 || b.cols() != 1 || a.rows() != st->num_nodes || b.rows() != st->num_nodes) {
        throw DimensionError("gather_edge_scores: scores must be " +
                             std::to_string(st->num_nodes) + "x1, got " + shape_str(a) +
                             " and " + shape_str(b));
    }
    DenseMatrix out(st->entries(), 1);
    for (std::size_t i = 0; i < st->num_nodes; ++i) {
        const double si = a(i, 0);
        for (std::size_t k = st->offsets[i]; k < st->offsets[i + 1]; ++k) {
            out(k, 0) = si + b(st->col[k], 0);
        }
    }
    const bool rg = requires_grad(s_self) || requires_grad(s_neigh);
    Value v = push(std::move(out), rg, "gather_edge_scores", {});
    if (rg) {
        nodes_[v.id].backward = [s_self, s_neigh, st, v](Tape& t) {
            const DenseMatrix& g = t.grad(v);
            const bool ra = t.requires_grad(s_self);
            const bool rb = t.requires_grad(s_neigh);
            for (std::size_t i = 0; i < st->num_nodes; ++i) {
                for (std::size_t k = st->offsets[i]; k < st->offsets[i + 1]; ++k) {
                    const double gv = g(k, 0);
                    if (ra) t.grad_mut(s_self)(i, 0) += gv;
                    if (rb) t.grad_mut(s_neigh)(st->col[k], 0) += gv;
                }
            }
        };
    }
    return v;
}

Value Tape::segment_softmax(Value e, std::shared_ptr<const AdjStructure> st) {
    const DenseMatrix& x = value(e);
    if (x.cols() != 1 || x.rows() != st->entries()) {
        throw DimensionError("segment_softmax: expected " + std::to_string(st->entries()) +
                             "x1 scores, got " + shape_str(x));
    }
    DenseMatrix out(x.rows(), 1);
    for (std::size_t i = 0; i < st->num_nodes; ++i) {
        const std::size_t lo = st->offsets[i], hi = st->offsets[i + 1];
        if (lo == hi) continue;
        double mx = x(lo, 0);
        for (std::size_t k = lo + 1; k < hi; ++k) mx = std::max(mx, x(k, 0));
        double denom = 0.0;
        for (std::size_t k = lo; k < hi; ++k) {
            out(k, 0) = std::exp(x(k, 0) - mx);
            denom += out(k, 0);
        }
        for (std::size_t k = lo; k < hi; ++k) out(k, 0) /= denom;
    }
    const bool rg = requires_grad(e);
    Value v = push(std::move(out), rg, "segment_softmax", {});
    if (rg) {
        nodes_[v.id].backward = [e, st, v](Tape& t) {
            const DenseMatrix& g = t.grad(v);
            const DenseMatrix& y = t.value(v);
            DenseMatrix& ge = t.grad_mut(e);
            for (std::size_t i = 0; i < st->num_nodes; ++i) {
                const std::size_t lo = st->offsets[i], hi = st->offsets[i + 1];
                double dot = 0.0;
                for (std::size_t k = lo; k < hi; ++k) dot += g(k, 0) * y(k, 0);
                for (std::size_t k = lo; k < hi; ++k) ge(k, 0) += y(k, 0) * (g(k, 0) - dot);
            }
        };
    }
    return v;
}

Value Tape::weighted_neighbor_sum(Value alpha, Value h,
                                  std::shared_ptr<const AdjStructure> st) {
    const DenseMatrix& a = value(alpha);
    const DenseMatrix& hv = value(h);
    if (a.cols() != 1 || a.rows() != st->entries()) {
        throw DimensionError("weighted_neighbor_sum: expected " + std::to_string(st->entries()) +
                             "x1 weights, got " + shape_str(a));
    }
    if (hv.rows() != st->num_nodes) {
        throw DimensionError("weighted_neighbor_sum: features have " + std::to_string(hv.rows()) +
                             " rows for " + std::to_string(st->num_nodes) + " nodes");
    }
    const std::size_t d = hv.cols();
    DenseMatrix out(st->num_nodes, d, 0.0);
    for (std::size_t i = 0; i < st->num_nodes; ++i) {
        double* dst = out.row(i);
        for (std::size_t k = st->offsets[i]; k < st->offsets[i + 1]; ++k) {
            const double w = a(k, 0);
            const double* src = hv.row(st->col[k]);
            for (std::size_t c = 0; c < d; ++c) dst[c] += w * src[c];
        }
    }
    const bool rg = requires_grad(alpha) || requires_grad(h);
    Value v = push(std::move(out), rg, "weighted_neighbor_sum", {});
    if (rg) {
        nodes_[v.id].backward = [alpha, h, st, v](Tape& t) {
            const DenseMatrix& g = t.grad(v);
            const DenseMatrix& a2 = t.value(alpha);
            const DenseMatrix& h2 = t.value(h);
            const bool ra = t.requires_grad(alpha);
            const bool rh = t.requires_grad(h);
            const std::size_t d = h2.cols();
            for (std::size_t i = 0; i < st->num_nodes; ++i) {
                const double* gr = g.row(i);
                for (std::size_t k = st->offsets[i]; k < st->offsets[i + 1]; ++k) {
                    const std::uint32_t j = st->col[k];
                    if (ra) {
                        const double* src = h2.row(j);
                        double acc = 0.0;
                        for (std::size_t c = 0; c < d; ++c) acc += gr[c] * src[c];
                        t.grad_mut(alpha)(k, 0) += acc;
                    }
                    if (rh) {
                        const double w = a2(k, 0);
                        double* dst = t.grad_mut(h).row(j);
                        for (std::size_t c = 0; c < d; ++c) dst[c] += w * gr[c];
                    }
                }
            }
        };
    }
    return v;
}

void Tape::backward(Value loss) {
    if (backward_ran_) {
        throw ValidationError("backward: called twice without zero_grad");
    }
    const DenseMatrix& lv = value(loss);
    if (lv.rows() != 1 || lv.cols() != 1) {
        throw ValidationError("backward: loss must be scalar, got " + shape_str(lv));
    }
    if (loss.id + 1 != nodes_.size()) {
        throw ValidationError("backward: loss must be the tape's final node");
    }
    backward_ran_ = true;
    grad_mut(loss)(0, 0) = 1.0;
    last_visits_ = 0;
    for (std::size_t i = nodes_.size(); i-- > 0;) {
        ++last_visits_;
        Node& node = nodes_[i];
        // A node whose buffer was never touched received no gradient, so
        // it has nothing to propagate.
        if (node.requires_grad && node.backward && node.grad.size() != 0) {
            node.backward(*this);
        }
    }
}

void Tape::zero_grad() {
    for (Node& node : nodes_) node.grad = DenseMatrix();
    backward_ran_ = false;
}

std::map<std::string, std::size_t> Tape::op_counts() const {
    std::map<std::string, std::size_t> counts;
    for (const Node& node : nodes_) counts[node.op]++;
    return counts;
}

} // namespace gnfbc
