#include "gnfbc/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <memory>
#include <nlohmann/json.hpp>
#include <sstream>
#include <utility>

#include "gnfbc/diagnostics.hpp"
#include "gnfbc/energy.hpp"
#include "gnfbc/errors.hpp"
#include "gnfbc/optim.hpp"

namespace gnfbc {

namespace {

std::vector<LayerSpec> build_specs(const TrainConfig& cfg, std::size_t in_dim,
                                   std::size_t num_classes) {
    std::vector<std::size_t> dims;
    dims.push_back(in_dim);
    dims.insert(dims.end(), cfg.hidden_dims.begin(), cfg.hidden_dims.end());
    dims.push_back(num_classes);
    std::vector<LayerSpec> specs;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        LayerSpec s;
        s.kind = cfg.backbone;
        s.in_dim = dims[l];
        s.out_dim = dims[l + 1];
        s.act = (l + 2 < dims.size()) ? Activation::Relu : Activation::None;
        s.sgc_hops = cfg.sgc_hops;
        specs.push_back(s);
    }
    return specs;
}

const Mask& split_mask(const Dataset& ds, const std::string& split) {
    if (!ds.splits.has_value()) {
        throw ValidationError("dataset has no splits; supply splits.txt or generate them");
    }
    if (split == "train") return ds.splits->train;
    if (split == "val") return ds.splits->val;
    if (split == "test") return ds.splits->test;
    throw ValidationError("unknown split \"" + split + "\", want train/val/test");
}

std::shared_ptr<const std::vector<double>> beta_for_mode(const Dataset& ds,
                                                         const TrainConfig& cfg) {
    switch (cfg.mode) {
        case TrainMode::AwareOnly:
            return std::make_shared<const std::vector<double>>(ds.num_nodes(), 0.0);
        case TrainMode::AgnosticOnly:
            return std::make_shared<const std::vector<double>>(ds.num_nodes(), 1.0);
        default:
            return std::make_shared<const std::vector<double>>(
                compute_beta(dirichlet_energy(ds.graph, ds.features), cfg.beta_min,
                             cfg.beta_max));
    }
}

// Forward used for training in each mode. Baseline modes run a single path
// instead of blending a pinned-beta pair.
ForwardOutput train_forward(Tape& t, const ModelStack& stack, Value x, TrainMode mode,
                            const GraphContext& ctx, const GraphContext& edgeless,
                            const StackValues& sv,
                            const std::shared_ptr<const std::vector<double>>& beta) {
    switch (mode) {
        case TrainMode::AwareOnly:
            return forward_backbone(t, stack, x, ctx, sv);
        case TrainMode::AgnosticOnly:
            return forward_backbone(t, stack, x, edgeless, sv);
        default:
            return forward_corrected(t, stack, x, ctx, sv, beta);
    }
}

// Validation/test forward with fixed parameters, on the path each mode
// actually predicts with: the corrected blend for the feedback modes, the
// single pure path for the baselines.
DenseMatrix infer_probs(const ModelStack& stack, const DenseMatrix& x, TrainMode mode,
                        const GraphContext& ctx, const GraphContext& edgeless,
                        const std::shared_ptr<const std::vector<double>>& beta) {
    Tape t;
    StackValues sv = push_params_frozen(t, stack);
    ForwardOutput out = train_forward(t, stack, t.leaf(x), mode, ctx, edgeless, sv, beta);
    return t.value(out.probs);
}

} // namespace

const char* mode_name(TrainMode m) {
    switch (m) {
        case TrainMode::Gnfbc: return "gnfbc";
        case TrainMode::GnfbcNoPenalty: return "gnfbc-no-Lneg";
        case TrainMode::AwareOnly: return "aware-only";
        case TrainMode::AgnosticOnly: return "agnostic-only";
    }
    return "?";
}

TrainMode mode_from_name(const std::string& name) {
    if (name == "gnfbc") return TrainMode::Gnfbc;
    if (name == "gnfbc-no-Lneg") return TrainMode::GnfbcNoPenalty;
    if (name == "aware-only") return TrainMode::AwareOnly;
    if (name == "agnostic-only") return TrainMode::AgnosticOnly;
    throw ValidationError("unknown mode \"" + name +
                          "\", want gnfbc/gnfbc-no-Lneg/aware-only/agnostic-only");
}

TrainResult train(const Dataset& ds, const TrainConfig& cfg) {
    if (cfg.epochs == 0) throw ValidationError("train: epochs must be >= 1");
    if (cfg.patience == 0) throw ValidationError("train: patience must be >= 1");
    if (!(cfg.lr > 0.0)) throw ValidationError("train: learning rate must be positive");
    if (ds.features.rows() != ds.graph.num_nodes() || ds.labels.size() != ds.graph.num_nodes()) {
        throw DimensionError("train: features/labels/graph disagree on node count");
    }
    const std::size_t num_classes = ds.num_classes();
    if (num_classes < 2) throw ValidationError("train: need at least two classes");
    const Mask& train_mask = split_mask(ds, "train");
    const Mask& val_mask = split_mask(ds, "val");
    const Mask& test_mask = split_mask(ds, "test");

    SeededRng rng(cfg.seed);
    ModelStack stack = make_stack(build_specs(cfg, ds.features.cols(), num_classes), rng);

    const GraphContext ctx = GraphContext::build(ds.graph);
    const GraphContext edgeless = GraphContext::edgeless(ds.num_nodes());
    auto graph_sp = std::make_shared<const SparseGraph>(ds.graph);
    auto beta = beta_for_mode(ds, cfg);

    LossConfig loss_cfg = cfg.loss;
    // The penalty is part of the corrected objective only; baselines and the
    // no-penalty ablation train on the bare fit term.
    if (cfg.mode != TrainMode::Gnfbc) loss_cfg.lambda = 0.0;

    AdamState adam(AdamConfig{.lr = cfg.lr});
    RunRecord record;
    record.beta = *beta;

    double best_acc = -1.0;
    std::vector<DenseMatrix> best_params = stack.params;
    std::size_t bad_epochs = 0;

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();

        Tape tape;
        StackValues sv = push_params(tape, stack);
        Value x = tape.leaf(ds.features);
        ForwardOutput out = train_forward(tape, stack, x, cfg.mode, ctx, edgeless, sv, beta);
        Value loss = negative_feedback_loss(tape, out.probs, out.logits, ds.labels, graph_sp,
                                            beta, loss_cfg, train_mask);
        const double loss_value = tape.value(loss)(0, 0);
        if (!std::isfinite(loss_value)) {
            throw NumericError("train: loss is not finite at epoch " + std::to_string(epoch));
        }
        tape.backward(loss);

        std::vector<DenseMatrix*> params;
        std::vector<const DenseMatrix*> grads;
        std::size_t idx = 0;
        for (const LayerParams& lp : sv.layers) {
            for (Value v : lp.tensors) {
                params.push_back(&stack.params[idx++]);
                grads.push_back(&tape.grad(v));
            }
        }
        adam.step(params, grads);

        const DenseMatrix val_probs =
            infer_probs(stack, ds.features, cfg.mode, ctx, edgeless, beta);
        EpochRecord er;
        er.epoch = epoch;
        er.train_loss = loss_value;
        er.val_accuracy = accuracy(val_probs, ds.labels, val_mask);
        er.val_f1 = f1_macro(val_probs, ds.labels, val_mask, num_classes);
        er.wall_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - t0)
                         .count();
        record.epochs.push_back(er);

        if (er.val_accuracy > best_acc) {
            best_acc = er.val_accuracy;
            record.best_epoch = epoch;
            best_params = stack.params;
            bad_epochs = 0;
        } else if (++bad_epochs >= cfg.patience) {
            record.stopped_early = true;
            break;
        }
    }

    stack.params = std::move(best_params);
    const DenseMatrix test_probs =
        infer_probs(stack, ds.features, cfg.mode, ctx, edgeless, beta);
    record.test = evaluate_split(test_probs, ds.labels, test_mask, num_classes, "test",
                                 static_cast<long>(record.best_epoch));
    return {std::move(stack), std::move(record)};
}

MetricsReport evaluate(const Dataset& ds, const ModelStack& stack, const std::string& split,
                       std::map<std::string, std::size_t>* ops) {
    const Mask& mask = split_mask(ds, split);
    const GraphContext ctx = GraphContext::build(ds.graph);
    Tape t;
    StackValues sv = push_params_frozen(t, stack);
    Value x = t.leaf(ds.features);
    ForwardOutput out = forward_backbone(t, stack, x, ctx, sv);
    if (ops) *ops = t.op_counts();
    return evaluate_split(t.value(out.probs), ds.labels, mask, ds.num_classes(), split, -1);
}

DenseMatrix predict(const Dataset& ds, const ModelStack& stack) {
    const GraphContext ctx = GraphContext::build(ds.graph);
    Tape t;
    StackValues sv = push_params_frozen(t, stack);
    Value x = t.leaf(ds.features);
    ForwardOutput out = forward_backbone(t, stack, x, ctx, sv);
    return t.value(out.probs);
}

std::string ablate_csv(const Dataset& ds, const TrainConfig& base,
                       const std::vector<std::uint64_t>& seeds) {
    if (!ds.splits.has_value()) {
        throw ValidationError("ablate: dataset has no splits; all modes must share one split");
    }
    constexpr TrainMode kModes[] = {TrainMode::Gnfbc, TrainMode::GnfbcNoPenalty,
                                    TrainMode::AwareOnly, TrainMode::AgnosticOnly};
    std::ostringstream os;
    os << "mode,seed,test_accuracy,test_f1,best_epoch,epochs_run\n";
    char buf[64];
    for (std::uint64_t seed : seeds) {
        for (TrainMode mode : kModes) {
            TrainConfig cfg = base;
            cfg.seed = seed;
            cfg.mode = mode;
            TrainResult res = train(ds, cfg);
            os << mode_name(mode) << ',' << seed << ',';
            std::snprintf(buf, sizeof(buf), "%.6f", res.record.test.accuracy);
            os << buf << ',';
            std::snprintf(buf, sizeof(buf), "%.6f", res.record.test.f1_macro);
            os << buf << ',' << res.record.best_epoch << ',' << res.record.epochs.size()
               << '\n';
        }
    }
    return os.str();
}

std::string energy_csv(const Dataset& ds, double beta_min, double beta_max) {
    const std::vector<double> energies = dirichlet_energy(ds.graph, ds.features);
    const std::vector<double> beta = compute_beta(energies, beta_min, beta_max);
    std::ostringstream os;
    os << "node,energy,beta\n";
    char buf[64];
    for (std::size_t i = 0; i < energies.size(); ++i) {
        os << i << ',';
        std::snprintf(buf, sizeof(buf), "%.17g", energies[i]);
        os << buf << ',';
        std::snprintf(buf, sizeof(buf), "%.17g", beta[i]);
        os << buf << '\n';
    }
    return os.str();
}

std::string run_bias(const Dataset& ds, const ModelStack& stack, const BiasRunConfig& cfg) {
    const DenseMatrix probs = predict(ds, stack);
    const std::size_t num_classes = ds.num_classes();
    const DenseMatrix target = one_hot(ds.labels, num_classes);

    // Scale factor: sample variance of the one-hot residuals, falling back
    // to 1 when the predictions are essentially exact.
    double mean = 0.0;
    const std::size_t count = probs.size();
    for (std::size_t i = 0; i < count; ++i) mean += target.data()[i] - probs.data()[i];
    mean /= static_cast<double>(count);
    double var = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        const double d = target.data()[i] - probs.data()[i] - mean;
        var += d * d;
    }
    double sigma2 = count > 1 ? var / static_cast<double>(count - 1) : 1.0;
    if (!(sigma2 > 0.0)) sigma2 = 1.0;

    CorrelationModel corr;
    std::optional<double> kappa;
    switch (cfg.source) {
        case RhoSource::GlobalHeuristic:
            corr = estimate_rho_global(ds.graph, ds.labels, sigma2);
            break;
        case RhoSource::File:
            corr = load_rho_file(cfg.rho_file, ds.graph, sigma2);
            break;
        case RhoSource::Attention: {
            if (stack.specs.empty() || stack.specs.front().kind != LayerKind::GAT) {
                throw ValidationError("bias: attention correlations need a gat backbone");
            }
            const GraphContext ctx = GraphContext::build(ds.graph);
            GatAttention att = gat_attention(stack, 0, ds.features, ctx);
            corr = gat_rho_from_attention(att, ds.graph, cfg.kappa, sigma2);
            kappa = cfg.kappa;
            break;
        }
    }

    BiasReport combined;
    combined.sigma2 = sigma2;
    combined.kappa = kappa;
    combined.per_node.assign(ds.num_nodes(), 0.0);
    std::vector<double> yhat(ds.num_nodes()), y(ds.num_nodes());
    for (std::size_t c = 0; c < num_classes; ++c) {
        for (std::size_t i = 0; i < ds.num_nodes(); ++i) {
            yhat[i] = probs(i, c);
            y[i] = target(i, c);
        }
        BiasReport col = bias_estimate(yhat, y, ds.graph, corr);
        combined.total += col.total;
        for (std::size_t i = 0; i < ds.num_nodes(); ++i) combined.per_node[i] += col.per_node[i];
    }

    nlohmann::json j = nlohmann::json::parse(bias_to_json(combined));
    switch (cfg.source) {
        case RhoSource::GlobalHeuristic: j["rho_source"] = "global-heuristic"; break;
        case RhoSource::File: j["rho_source"] = "file"; break;
        case RhoSource::Attention: j["rho_source"] = "attention"; break;
    }
    j["num_classes"] = num_classes;
    j.erase("epsilon"); // per-class adjusted predictions have no single summed form
    return j.dump(2);
}

} // namespace gnfbc
