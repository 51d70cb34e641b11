#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "gnfbc/graph.hpp"
#include "gnfbc/matrix.hpp"
#include "gnfbc/rng.hpp"
#include "gnfbc/tape.hpp"

namespace gnfbc {

enum class LayerKind { GCN, SGC, SAGE, GAT, Linear };
enum class Activation { Relu, None };

struct LayerSpec {
    LayerKind kind = LayerKind::GCN;
    std::size_t in_dim = 0;
    std::size_t out_dim = 0;
    Activation act = Activation::Relu;
    std::size_t sgc_hops = 2;   // SGC only: propagation steps before the linear map
    double gat_slope = 0.2;     // GAT only: leaky-relu slope for attention scores
};

/// Number of parameter tensors a layer owns. Declaration order:
/// GCN/SGC/Linear {W}; SAGE {W_self, W_neigh}; GAT {W, a_src, a_dst}.
std::size_t layer_param_count(LayerKind kind);

/// A layer stack with one flat parameter store. Both the graph-aware and the
/// graph-agnostic paths read these same tensors, so a single optimizer update
/// moves both at once.
struct ModelStack {
    std::vector<LayerSpec> specs;
    std::vector<DenseMatrix> params;            // all tensors, declaration order
    std::vector<std::size_t> param_offsets;     // first tensor index per layer

    std::size_t num_layers() const { return specs.size(); }
    std::size_t param_offset(std::size_t layer) const { return param_offsets[layer]; }
};

/// Validates that layer dims chain and Xavier-initializes every tensor.
ModelStack make_stack(const std::vector<LayerSpec>& specs, SeededRng& rng);

/// Preprocessed per-graph operators shared by all layers: the symmetrically
/// normalized adjacency (self-loops added), the row-mean aggregation matrix
/// and its transpose, and the neighborhood-plus-self structure for attention.
struct GraphContext {
    std::size_t num_nodes = 0;
    bool is_identity = false;   // edgeless: every operator reduces to I
    std::shared_ptr<const SparseMatrix> norm_adj;
    std::shared_ptr<const SparseMatrix> mean_adj;
    std::shared_ptr<const SparseMatrix> mean_adj_t;
    std::shared_ptr<const AdjStructure> nbhd_self;

    static GraphContext build(const SparseGraph& g);
    static GraphContext edgeless(std::size_t n);
};

/// Tape handles for one layer's tensors, same order as the stack store.
struct LayerParams {
    std::vector<Value> tensors;
};

/// Tape handles for the whole stack.
struct StackValues {
    std::vector<LayerParams> layers;
};

/// Records every stack tensor on the tape as a trainable parameter.
StackValues push_params(Tape& t, const ModelStack& stack);
/// Records every stack tensor as a constant leaf (inference).
StackValues push_params_frozen(Tape& t, const ModelStack& stack);

/// One layer along the structure-using path.
Value forward_aware(Tape& t, const LayerSpec& spec, Value h,
                    const GraphContext& ctx, const LayerParams& p);

/// One layer with the adjacency replaced by identity; same parameters.
Value forward_agnostic(Tape& t, const LayerSpec& spec, Value h,
                       const LayerParams& p);

/// Aware and agnostic outputs of one layer with common subexpressions
/// recorded once (the shared linear maps). When ctx is itself the identity
/// the two handles coincide and carry the activated value; otherwise both
/// branches are pre-activation and `act` is left for the caller to fuse
/// into the blend.
struct LayerPair {
    Value aware;
    Value agnostic;
    Activation act = Activation::None;
};
LayerPair forward_layer_pair(Tape& t, const LayerSpec& spec, Value h,
                             const GraphContext& ctx, const LayerParams& p);

/// r = aware - agnostic.
DenseMatrix residual(const DenseMatrix& aware, const DenseMatrix& agnostic);

/// Row i = aware_i - beta_i * (aware_i - agnostic_i).
DenseMatrix apply_correction(const DenseMatrix& aware, const DenseMatrix& agnostic,
                             const std::vector<double>& beta);

struct ForwardOutput {
    Value probs;    // softmax over final logits
    Value logits;   // final pre-softmax representation
};

/// Corrected forward pass: every layer's aware and agnostic outputs are
/// blended row-wise by beta, the result feeds the next layer, and the final
/// blended logits pass through one softmax.
ForwardOutput forward_corrected(Tape& t, const ModelStack& stack, Value x,
                                const GraphContext& ctx, const StackValues& sv,
                                std::shared_ptr<const std::vector<double>> beta);

/// Plain single-path forward (no blending): the backbone on the given
/// context. Pass an edgeless context for the pure feature model.
ForwardOutput forward_backbone(Tape& t, const ModelStack& stack, Value x,
                               const GraphContext& ctx, const StackValues& sv);

/// Attention weights of one GAT layer evaluated outside any training tape:
/// per node the coefficients over N(i) u {i} in structure order.
struct GatAttention {
    std::shared_ptr<const AdjStructure> structure;
    std::vector<double> alpha;
};
GatAttention gat_attention(const ModelStack& stack, std::size_t layer,
                           const DenseMatrix& h, const GraphContext& ctx);

} // namespace gnfbc
