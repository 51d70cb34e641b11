#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gnfbc/dataset.hpp"
#include "gnfbc/layers.hpp"
#include "gnfbc/loss.hpp"
#include "gnfbc/metrics.hpp"

namespace gnfbc {

enum class TrainMode {
    Gnfbc,          // blended forward, full loss
    GnfbcNoPenalty, // blended forward, penalty scale forced to 0
    AwareOnly,      // plain backbone, beta pinned to 0
    AgnosticOnly,   // feature-only model, beta pinned to 1
};

const char* mode_name(TrainMode m);
TrainMode mode_from_name(const std::string& name);

struct TrainConfig {
    LayerKind backbone = LayerKind::GCN;
    std::vector<std::size_t> hidden_dims = {16};
    std::size_t sgc_hops = 2;
    std::size_t epochs = 500;
    double lr = 0.01;
    std::size_t patience = 20;
    LossConfig loss;
    double beta_min = 0.05;
    double beta_max = 0.95;
    std::uint64_t seed = 0;
    TrainMode mode = TrainMode::Gnfbc;
};

struct EpochRecord {
    std::size_t epoch = 0;      // 1-based
    double train_loss = 0.0;
    double val_accuracy = 0.0;
    double val_f1 = 0.0;
    double wall_ms = 0.0;       // logged only; never part of metrics.json
};

struct RunRecord {
    std::vector<EpochRecord> epochs;
    std::size_t best_epoch = 0; // 1-based epoch whose parameters were kept
    bool stopped_early = false;
    MetricsReport test;
    std::vector<double> beta;
};

struct TrainResult {
    ModelStack stack; // best-epoch parameters
    RunRecord record;
};

/// Full training run: feedback coefficients from raw features, one tape per
/// epoch, Adam updates on the shared parameters, early stopping on
/// validation accuracy with best-parameter restore.
TrainResult train(const Dataset& ds, const TrainConfig& cfg);

/// Structure-using forward of the trained stack on one split. ops, when
/// given, receives the tape's operation counts so callers can assert what
/// inference executed.
MetricsReport evaluate(const Dataset& ds, const ModelStack& stack, const std::string& split,
                       std::map<std::string, std::size_t>* ops = nullptr);

/// Class probabilities of the structure-using forward for every node.
DenseMatrix predict(const Dataset& ds, const ModelStack& stack);

/// All four modes on identical splits, one run per (mode, seed).
/// Returns CSV: mode,seed,test_accuracy,test_f1,best_epoch,epochs_run.
std::string ablate_csv(const Dataset& ds, const TrainConfig& base,
                       const std::vector<std::uint64_t>& seeds);

/// CSV "node,energy,beta" over the dataset's raw features.
std::string energy_csv(const Dataset& ds, double beta_min, double beta_max);

enum class RhoSource { GlobalHeuristic, File, Attention };

struct BiasRunConfig {
    RhoSource source = RhoSource::GlobalHeuristic;
    std::string rho_file;     // source == File
    double kappa = 0.5;       // source == Attention
};

/// Label-autocorrelation bias of the trained model's predictions, one-hot
/// column at a time, summed over classes. Returns the bias.json payload.
std::string run_bias(const Dataset& ds, const ModelStack& stack, const BiasRunConfig& cfg);

} // namespace gnfbc
