#include "gnfbc/layers.hpp"

#include <string>
#include <utility>

#include "gnfbc/errors.hpp"
#include "gnfbc/optim.hpp"

namespace gnfbc {

namespace {

Value apply_act(Tape& t, Activation act, Value v) {
    return act == Activation::Relu ? t.relu(v) : v;
}

const char* kind_name(LayerKind kind) {
    switch (kind) {
        case LayerKind::GCN: return "gcn";
        case LayerKind::SGC: return "sgc";
        case LayerKind::SAGE: return "sage";
        case LayerKind::GAT: return "gat";
        case LayerKind::Linear: return "linear";
    }
    return "?";
}

} // namespace

std::size_t layer_param_count(LayerKind kind) {
    switch (kind) {
        case LayerKind::SAGE: return 2;
        case LayerKind::GAT: return 3;
        default: return 1;
    }
}

ModelStack make_stack(const std::vector<LayerSpec>& specs, SeededRng& rng) {
    if (specs.empty()) throw ValidationError("make_stack: no layers");
    ModelStack stack;
    stack.specs = specs;
    for (std::size_t l = 0; l < specs.size(); ++l) {
        const LayerSpec& s = specs[l];
        if (s.in_dim == 0 || s.out_dim == 0) {
            throw ValidationError("make_stack: layer " + std::to_string(l) + " has zero dim");
        }
        if (l > 0 && specs[l - 1].out_dim != s.in_dim) {
            throw DimensionError("make_stack: layer " + std::to_string(l) + " expects in_dim " +
                                 std::to_string(specs[l - 1].out_dim) + ", got " +
                                 std::to_string(s.in_dim));
        }
        if (s.kind == LayerKind::SGC && s.sgc_hops == 0) {
            throw ValidationError("make_stack: sgc layer needs at least one hop");
        }
        if (s.kind == LayerKind::GAT && (s.gat_slope <= 0.0 || s.gat_slope >= 1.0)) {
            throw ValidationError("make_stack: gat slope must lie in (0,1)");
        }
        stack.param_offsets.push_back(stack.params.size());
        switch (s.kind) {
            case LayerKind::SAGE:
                stack.params.push_back(xavier_init(rng, s.in_dim, s.out_dim));
                stack.params.push_back(xavier_init(rng, s.in_dim, s.out_dim));
                break;
            case LayerKind::GAT:
                stack.params.push_back(xavier_init(rng, s.in_dim, s.out_dim));
                stack.params.push_back(xavier_init(rng, s.out_dim, 1));
                stack.params.push_back(xavier_init(rng, s.out_dim, 1));
                break;
            default:
                stack.params.push_back(xavier_init(rng, s.in_dim, s.out_dim));
                break;
        }
    }
    return stack;
}

GraphContext GraphContext::build(const SparseGraph& g) {
    GraphContext ctx;
    ctx.num_nodes = g.num_nodes();
    ctx.is_identity = g.num_edges() == 0;
    ctx.norm_adj = std::make_shared<const SparseMatrix>(normalize_adjacency(g));
    auto mean = std::make_shared<SparseMatrix>(mean_aggregation(g));
    ctx.mean_adj_t = std::make_shared<const SparseMatrix>(mean->transposed());
    ctx.mean_adj = std::move(mean);
    ctx.nbhd_self = std::make_shared<const AdjStructure>(AdjStructure::with_self_loops(g));
    return ctx;
}

GraphContext GraphContext::edgeless(std::size_t n) {
    GraphContext ctx;
    ctx.num_nodes = n;
    ctx.is_identity = true;
    auto eye = std::make_shared<const SparseMatrix>(SparseMatrix::identity(n));
    ctx.norm_adj = eye;
    ctx.mean_adj = eye;
    ctx.mean_adj_t = eye;
    ctx.nbhd_self = std::make_shared<const AdjStructure>(AdjStructure::self_only(n));
    return ctx;
}

StackValues push_params(Tape& t, const ModelStack& stack) {
    StackValues sv;
    sv.layers.resize(stack.num_layers());
    std::size_t idx = 0;
    for (std::size_t l = 0; l < stack.num_layers(); ++l) {
        const std::size_t n = layer_param_count(stack.specs[l].kind);
        for (std::size_t k = 0; k < n; ++k) sv.layers[l].tensors.push_back(t.param(stack.params[idx++]));
    }
    return sv;
}

StackValues push_params_frozen(Tape& t, const ModelStack& stack) {
    StackValues sv;
    sv.layers.resize(stack.num_layers());
    std::size_t idx = 0;
    for (std::size_t l = 0; l < stack.num_layers(); ++l) {
        const std::size_t n = layer_param_count(stack.specs[l].kind);
        for (std::size_t k = 0; k < n; ++k) sv.layers[l].tensors.push_back(t.leaf(stack.params[idx++]));
    }
    return sv;
}

Value forward_aware(Tape& t, const LayerSpec& spec, Value h,
                    const GraphContext& ctx, const LayerParams& p) {
    switch (spec.kind) {
        case LayerKind::Linear:
            return apply_act(t, spec.act, t.matmul(h, p.tensors[0]));
        case LayerKind::GCN: {
            Value hw = t.matmul(h, p.tensors[0]);
            if (ctx.is_identity) return apply_act(t, spec.act, hw);
            return apply_act(t, spec.act, t.spmm(ctx.norm_adj, ctx.norm_adj, hw));
        }
        case LayerKind::SGC: {
            Value prop = h;
            if (!ctx.is_identity) {
                for (std::size_t k = 0; k < spec.sgc_hops; ++k) {
                    prop = t.spmm(ctx.norm_adj, ctx.norm_adj, prop);
                }
            }
            return apply_act(t, spec.act, t.matmul(prop, p.tensors[0]));
        }
        case LayerKind::SAGE: {
            Value hs = t.matmul(h, p.tensors[0]);
            Value nb = ctx.is_identity ? h : t.spmm(ctx.mean_adj, ctx.mean_adj_t, h);
            Value hn = t.matmul(nb, p.tensors[1]);
            return apply_act(t, spec.act, t.add(hs, hn));
        }
        case LayerKind::GAT: {
            Value hw = t.matmul(h, p.tensors[0]);
            if (ctx.is_identity) return apply_act(t, spec.act, hw);
            Value s_self = t.matmul(hw, p.tensors[1]);
            Value s_neigh = t.matmul(hw, p.tensors[2]);
            Value e = t.leaky_relu(t.gather_edge_scores(s_self, s_neigh, ctx.nbhd_self),
                                   spec.gat_slope);
            Value alpha = t.segment_softmax(e, ctx.nbhd_self);
            return apply_act(t, spec.act, t.weighted_neighbor_sum(alpha, hw, ctx.nbhd_self));
        }
    }
    throw ValidationError("forward_aware: unknown layer kind");
}

Value forward_agnostic(Tape& t, const LayerSpec& spec, Value h, const LayerParams& p) {
    GraphContext identity;
    identity.is_identity = true;
    return forward_aware(t, spec, h, identity, p);
}

LayerPair forward_layer_pair(Tape& t, const LayerSpec& spec, Value h,
                             const GraphContext& ctx, const LayerParams& p) {
    if (ctx.is_identity || spec.kind == LayerKind::Linear) {
        Value v = forward_aware(t, spec, h, ctx, p);
        return {v, v, Activation::None};
    }
    switch (spec.kind) {
        case LayerKind::GCN: {
            Value hw = t.matmul(h, p.tensors[0]);
            Value aware = t.spmm(ctx.norm_adj, ctx.norm_adj, hw);
            return {aware, hw, spec.act};
        }
        case LayerKind::SGC: {
            Value prop = h;
            for (std::size_t k = 0; k < spec.sgc_hops; ++k) {
                prop = t.spmm(ctx.norm_adj, ctx.norm_adj, prop);
            }
            Value aware = t.matmul(prop, p.tensors[0]);
            Value agn = t.matmul(h, p.tensors[0]);
            return {aware, agn, spec.act};
        }
        case LayerKind::SAGE: {
            Value hs = t.matmul(h, p.tensors[0]);
            Value nb = t.spmm(ctx.mean_adj, ctx.mean_adj_t, h);
            Value aware = t.add(hs, t.matmul(nb, p.tensors[1]));
            Value agn = t.add(hs, t.matmul(h, p.tensors[1]));
            return {aware, agn, spec.act};
        }
        case LayerKind::GAT: {
            Value hw = t.matmul(h, p.tensors[0]);
            Value s_self = t.matmul(hw, p.tensors[1]);
            Value s_neigh = t.matmul(hw, p.tensors[2]);
            Value e = t.leaky_relu(t.gather_edge_scores(s_self, s_neigh, ctx.nbhd_self),
                                   spec.gat_slope);
            Value alpha = t.segment_softmax(e, ctx.nbhd_self);
            Value aware = t.weighted_neighbor_sum(alpha, hw, ctx.nbhd_self);
            return {aware, hw, spec.act};
        }
        default:
            throw ValidationError(std::string("forward_layer_pair: unhandled kind ") +
                                  kind_name(spec.kind));
    }
}

DenseMatrix residual(const DenseMatrix& aware, const DenseMatrix& agnostic) {
    if (!aware.same_shape(agnostic)) {
        throw DimensionError("residual: shapes differ, " + shape_str(aware) + " vs " +
                             shape_str(agnostic));
    }
    DenseMatrix r = aware;
    for (std::size_t i = 0; i < r.size(); ++i) r.data()[i] -= agnostic.data()[i];
    return r;
}

DenseMatrix apply_correction(const DenseMatrix& aware, const DenseMatrix& agnostic,
                             const std::vector<double>& beta) {
    if (!aware.same_shape(agnostic)) {
        throw DimensionError("apply_correction: shapes differ, " + shape_str(aware) + " vs " +
                             shape_str(agnostic));
    }
    if (beta.size() != aware.rows()) {
        throw DimensionError("apply_correction: beta has " + std::to_string(beta.size()) +
                             " entries for " + std::to_string(aware.rows()) + " rows");
    }
    DenseMatrix out(aware.rows(), aware.cols());
    for (std::size_t i = 0; i < aware.rows(); ++i) {
        const double bi = beta[i];
        for (std::size_t j = 0; j < aware.cols(); ++j) {
            out(i, j) = aware(i, j) - bi * (aware(i, j) - agnostic(i, j));
        }
    }
    return out;
}

ForwardOutput forward_corrected(Tape& t, const ModelStack& stack, Value x,
                                const GraphContext& ctx, const StackValues& sv,
                                std::shared_ptr<const std::vector<double>> beta) {
    Value h = x;
    for (std::size_t l = 0; l < stack.num_layers(); ++l) {
        LayerPair pair = forward_layer_pair(t, stack.specs[l], h, ctx, sv.layers[l]);
        // Equal handles mean a zero residual; the correction is then exact identity.
        // Otherwise the pending activation fuses into the blend node.
        h = pair.aware.id == pair.agnostic.id
                ? pair.aware
                : t.blend_rows(pair.aware, pair.agnostic, beta,
                               pair.act == Activation::Relu);
    }
    return {t.softmax_rows(h), h};
}

ForwardOutput forward_backbone(Tape& t, const ModelStack& stack, Value x,
                               const GraphContext& ctx, const StackValues& sv) {
    Value h = x;
    for (std::size_t l = 0; l < stack.num_layers(); ++l) {
        h = forward_aware(t, stack.specs[l], h, ctx, sv.layers[l]);
    }
    return {t.softmax_rows(h), h};
}

GatAttention gat_attention(const ModelStack& stack, std::size_t layer,
                           const DenseMatrix& h, const GraphContext& ctx) {
    if (layer >= stack.num_layers()) {
        throw ValidationError("gat_attention: layer index out of range");
    }
    const LayerSpec& spec = stack.specs[layer];
    if (spec.kind != LayerKind::GAT) {
        throw ValidationError("gat_attention: layer " + std::to_string(layer) + " is " +
                              kind_name(spec.kind) + ", attention needs a gat layer");
    }
    const std::size_t off = stack.param_offset(layer);
    Tape t;
    Value hv = t.leaf(h);
    Value hw = t.matmul(hv, t.leaf(stack.params[off]));
    Value s_self = t.matmul(hw, t.leaf(stack.params[off + 1]));
    Value s_neigh = t.matmul(hw, t.leaf(stack.params[off + 2]));
    Value e = t.leaky_relu(t.gather_edge_scores(s_self, s_neigh, ctx.nbhd_self), spec.gat_slope);
    Value alpha = t.segment_softmax(e, ctx.nbhd_self);
    const DenseMatrix& av = t.value(alpha);
    GatAttention out;
    out.structure = ctx.nbhd_self;
    out.alpha.resize(av.rows());
    for (std::size_t k = 0; k < av.rows(); ++k) out.alpha[k] = av(k, 0);
    return out;
}

} // namespace gnfbc
