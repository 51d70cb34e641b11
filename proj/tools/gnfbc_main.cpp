// Command-line front end: train/eval/ablate/generate/energy/bias/complexity.
#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "gnfbc/complexity.hpp"
#include "gnfbc/dataset.hpp"
#include "gnfbc/errors.hpp"
#include "gnfbc/train.hpp"
#include "gnfbc/weights_io.hpp"

namespace fs = std::filesystem;

namespace {

struct TrainFlags {
    std::string data_dir;
    std::string out_dir = ".";
    std::string backbone = "gcn";
    std::vector<std::size_t> layers = {16};
    std::size_t sgc_hops = 2;
    std::size_t epochs = 500;
    double lr = 0.01;
    std::size_t patience = 20;
    std::string fit = "cross-entropy";
    double lambda = 1.0;
    std::string penalty_domain = "probabilities";
    std::string penalty_nodes = "all";
    double beta_min = 0.05;
    double beta_max = 0.95;
    std::uint64_t seed = 0;
    std::string mode = "gnfbc";
};

gnfbc::LayerKind backbone_from_name(const std::string& name) {
    if (name == "gcn") return gnfbc::LayerKind::GCN;
    if (name == "sgc") return gnfbc::LayerKind::SGC;
    if (name == "sage") return gnfbc::LayerKind::SAGE;
    if (name == "gat") return gnfbc::LayerKind::GAT;
    if (name == "linear") return gnfbc::LayerKind::Linear;
    throw gnfbc::ValidationError("unknown backbone \"" + name +
                                 "\", want gcn/sgc/sage/gat/linear");
}

gnfbc::TrainConfig to_train_config(const TrainFlags& f) {
    gnfbc::TrainConfig cfg;
    cfg.backbone = backbone_from_name(f.backbone);
    cfg.hidden_dims = f.layers;
    cfg.sgc_hops = f.sgc_hops;
    cfg.epochs = f.epochs;
    cfg.lr = f.lr;
    cfg.patience = f.patience;
    cfg.beta_min = f.beta_min;
    cfg.beta_max = f.beta_max;
    cfg.seed = f.seed;
    cfg.mode = gnfbc::mode_from_name(f.mode);
    if (f.fit == "cross-entropy" || f.fit == "ce") {
        cfg.loss.fit = gnfbc::FitTerm::CrossEntropy;
    } else if (f.fit == "mse") {
        cfg.loss.fit = gnfbc::FitTerm::Mse;
    } else {
        throw gnfbc::ValidationError("unknown fit term \"" + f.fit +
                                     "\", want cross-entropy/mse");
    }
    cfg.loss.lambda = f.lambda;
    if (f.penalty_domain == "probabilities") {
        cfg.loss.domain = gnfbc::PenaltyDomain::Probabilities;
    } else if (f.penalty_domain == "logits") {
        cfg.loss.domain = gnfbc::PenaltyDomain::Logits;
    } else {
        throw gnfbc::ValidationError("unknown penalty domain \"" + f.penalty_domain +
                                     "\", want probabilities/logits");
    }
    if (f.penalty_nodes == "all") {
        cfg.loss.nodes = gnfbc::PenaltyNodes::AllNodes;
    } else if (f.penalty_nodes == "train") {
        cfg.loss.nodes = gnfbc::PenaltyNodes::TrainOnly;
    } else {
        throw gnfbc::ValidationError("unknown penalty node set \"" + f.penalty_nodes +
                                     "\", want all/train");
    }
    return cfg;
}

std::map<CLI::App*, std::string> g_config_paths;

void add_config_flag(CLI::App* cmd) {
    cmd->add_option("--config", g_config_paths[cmd],
                    "Flat key = value config file; flags override");
}

void add_train_flags(CLI::App* cmd, TrainFlags& f, bool with_mode = true) {
    cmd->add_option("--data-dir", f.data_dir, "Dataset directory")->required();
    cmd->add_option("--out", f.out_dir, "Output directory");
    cmd->add_option("--backbone", f.backbone, "Layer kind: gcn/sgc/sage/gat/linear");
    cmd->add_option("--layers", f.layers, "Hidden layer widths")->delimiter(',');
    cmd->add_option("--sgc-hops", f.sgc_hops, "Propagation hops per sgc layer");
    cmd->add_option("--epochs", f.epochs, "Maximum training epochs");
    cmd->add_option("--lr", f.lr, "Adam learning rate");
    cmd->add_option("--patience", f.patience, "Early-stopping patience (epochs)");
    cmd->add_option("--fit", f.fit, "Fit term: cross-entropy/mse");
    cmd->add_option("--lambda", f.lambda, "Neighbor-penalty scale");
    cmd->add_option("--penalty-domain", f.penalty_domain, "Penalty on probabilities/logits");
    cmd->add_option("--penalty-nodes", f.penalty_nodes, "Penalty node set: all/train");
    cmd->add_option("--beta-min", f.beta_min, "Feedback coefficient floor");
    cmd->add_option("--beta-max", f.beta_max, "Feedback coefficient ceiling");
    cmd->add_option("--seed", f.seed, "RNG seed");
    if (with_mode) {
        cmd->add_option("--mode", f.mode,
                        "gnfbc, gnfbc-no-Lneg, aware-only or agnostic-only");
    }
    add_config_flag(cmd);
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

/// Applies a flat "key = value" file ('#' comments) to one subcommand's
/// options. Keys mirror the long flag names; values given on the command
/// line win over the file.
void apply_config(CLI::App* cmd, const std::string& path) {
    std::ifstream is(path);
    if (!is) throw gnfbc::ValidationError("cannot open config file " + path);
    std::string line;
    std::size_t lineno = 0;
    std::map<CLI::Option*, std::string> file_values; // last occurrence wins
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw gnfbc::FormatError(path + ":" + std::to_string(lineno) +
                                     ": expected \"key = value\"");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty() || key == "config") {
            throw gnfbc::FormatError(path + ":" + std::to_string(lineno) +
                                     ": expected \"key = value\"");
        }
        try {
            file_values[cmd->get_option("--" + key)] = value;
        } catch (const CLI::OptionNotFound&) {
            throw gnfbc::ValidationError(path + ":" + std::to_string(lineno) +
                                         ": unknown key \"" + key + "\"");
        }
    }
    for (auto& [opt, value] : file_values) {
        if (opt->count() > 0) continue; // the command line wins
        opt->add_result(value);
        opt->run_callback();
    }
}

gnfbc::Dataset load_with_splits(const std::string& dir, std::uint64_t seed) {
    gnfbc::Dataset ds = gnfbc::load_dataset(dir);
    if (!ds.splits.has_value()) {
        ds.splits = gnfbc::make_splits(ds.num_nodes(), gnfbc::SplitRatios{}, seed);
    }
    return ds;
}

void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    os << content;
    if (!os) throw gnfbc::ValidationError("failed writing " + path.string());
}

std::string train_log_jsonl(const gnfbc::RunRecord& record) {
    std::string out;
    for (const gnfbc::EpochRecord& er : record.epochs) {
        nlohmann::json j;
        j["epoch"] = er.epoch;
        j["train_loss"] = er.train_loss;
        j["val_accuracy"] = er.val_accuracy;
        j["val_f1"] = er.val_f1;
        j["wall_ms"] = er.wall_ms;
        out += j.dump();
        out += '\n';
    }
    return out;
}

int run(int argc, char** argv) {
    CLI::App app{"Graph training lab with per-layer negative-feedback bias correction"};
    app.require_subcommand(1);

    TrainFlags tf;
    CLI::App* cmd_train = app.add_subcommand("train", "Train one model and write its outputs");
    add_train_flags(cmd_train, tf);

    struct {
        std::string data_dir, weights, split = "test", out_dir = ".";
        std::uint64_t seed = 0;
    } ef;
    CLI::App* cmd_eval = app.add_subcommand("eval", "Evaluate stored weights on one split");
    cmd_eval->add_option("--data-dir", ef.data_dir, "Dataset directory")->required();
    cmd_eval->add_option("--weights", ef.weights, "Weights file")->required();
    cmd_eval->add_option("--split", ef.split, "train/val/test");
    cmd_eval->add_option("--out", ef.out_dir, "Output directory");
    cmd_eval->add_option("--seed", ef.seed, "Seed for generated splits when absent");
    add_config_flag(cmd_eval);

    TrainFlags af;
    std::vector<std::uint64_t> ablate_seeds = {0, 1, 2, 3, 4};
    CLI::App* cmd_ablate = app.add_subcommand("ablate", "Run all four modes over seeds");
    add_train_flags(cmd_ablate, af, /*with_mode=*/false);
    cmd_ablate->add_option("--seeds", ablate_seeds, "Seed list")->delimiter(',');

    gnfbc::SynthConfig sc;
    std::string gen_out = ".";
    CLI::App* cmd_gen = app.add_subcommand("generate", "Write a synthetic dataset");
    cmd_gen->add_option("--out", gen_out, "Output directory")->required();
    cmd_gen->add_option("--nodes", sc.num_nodes, "Node count");
    cmd_gen->add_option("--classes", sc.num_classes, "Class count");
    cmd_gen->add_option("--homophily", sc.homophily, "Same-class edge probability");
    cmd_gen->add_option("--degree", sc.mean_degree, "Mean node degree");
    cmd_gen->add_option("--dim", sc.feature_dim, "Feature dimension");
    cmd_gen->add_option("--separation", sc.separation, "Class-mean separation");
    cmd_gen->add_option("--noise", sc.noise, "Feature noise scale");
    cmd_gen->add_option("--seed", sc.seed, "RNG seed");
    add_config_flag(cmd_gen);

    struct {
        std::string data_dir, out_dir = ".";
        double beta_min = 0.05, beta_max = 0.95;
        std::uint64_t seed = 0;
    } enf;
    CLI::App* cmd_energy = app.add_subcommand("energy", "Per-node energy and feedback dump");
    cmd_energy->add_option("--data-dir", enf.data_dir, "Dataset directory")->required();
    cmd_energy->add_option("--out", enf.out_dir, "Output directory");
    cmd_energy->add_option("--beta-min", enf.beta_min, "Feedback coefficient floor");
    cmd_energy->add_option("--beta-max", enf.beta_max, "Feedback coefficient ceiling");
    add_config_flag(cmd_energy);

    struct {
        std::string data_dir, weights, out_dir = ".", rho_source = "global-heuristic";
        std::string rho_file;
        double kappa = 0.5;
        std::uint64_t seed = 0;
    } bf;
    CLI::App* cmd_bias = app.add_subcommand("bias", "Label-autocorrelation bias report");
    cmd_bias->add_option("--data-dir", bf.data_dir, "Dataset directory")->required();
    cmd_bias->add_option("--weights", bf.weights, "Weights file")->required();
    cmd_bias->add_option("--out", bf.out_dir, "Output directory");
    cmd_bias->add_option("--rho-source", bf.rho_source,
                         "global-heuristic, file or attention");
    cmd_bias->add_option("--rho-file", bf.rho_file, "Per-edge \"u v rho\" override file");
    cmd_bias->add_option("--kappa", bf.kappa, "Attention-to-correlation scale");
    cmd_bias->add_option("--seed", bf.seed, "Seed for generated splits when absent");
    add_config_flag(cmd_bias);

    struct {
        std::size_t batch = 1;
        std::vector<std::size_t> fanouts, in_dims, out_dims;
    } cf;
    CLI::App* cmd_cx = app.add_subcommand("complexity", "Analytic cost of a sampled stack");
    cmd_cx->add_option("--batch", cf.batch, "Mini-batch size");
    cmd_cx->add_option("--fanouts", cf.fanouts, "Per-layer fan-outs")
        ->delimiter(',')
        ->required();
    cmd_cx->add_option("--in-dims", cf.in_dims, "Per-layer input dims")
        ->delimiter(',')
        ->required();
    cmd_cx->add_option("--out-dims", cf.out_dims, "Per-layer output dims")
        ->delimiter(',')
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }
    for (auto& [cmd, path] : g_config_paths) {
        if (cmd->parsed() && !path.empty()) apply_config(cmd, path);
    }

    if (cmd_train->parsed()) {
        gnfbc::TrainConfig cfg = to_train_config(tf);
        gnfbc::Dataset ds = load_with_splits(tf.data_dir, cfg.seed);
        gnfbc::TrainResult res = gnfbc::train(ds, cfg);
        write_file(fs::path(tf.out_dir) / "metrics.json",
                   gnfbc::metrics_to_json(res.record.test) + "\n");
        write_file(fs::path(tf.out_dir) / "train_log.jsonl", train_log_jsonl(res.record));
        gnfbc::save_weights(res.stack, (fs::path(tf.out_dir) / "weights.gnfbc").string());
        std::cout << gnfbc::metrics_to_json(res.record.test) << std::endl;
    } else if (cmd_eval->parsed()) {
        gnfbc::Dataset ds = load_with_splits(ef.data_dir, ef.seed);
        gnfbc::ModelStack stack = gnfbc::load_weights(ef.weights);
        gnfbc::MetricsReport report = gnfbc::evaluate(ds, stack, ef.split);
        write_file(fs::path(ef.out_dir) / "metrics.json",
                   gnfbc::metrics_to_json(report) + "\n");
        std::cout << gnfbc::metrics_to_json(report) << std::endl;
    } else if (cmd_ablate->parsed()) {
        gnfbc::TrainConfig cfg = to_train_config(af);
        gnfbc::Dataset ds = load_with_splits(af.data_dir, cfg.seed);
        const std::string csv = gnfbc::ablate_csv(ds, cfg, ablate_seeds);
        write_file(fs::path(af.out_dir) / "ablation.csv", csv);
        std::cout << csv;
    } else if (cmd_gen->parsed()) {
        gnfbc::write_dataset(gnfbc::generate_synthetic(sc), gen_out);
        std::cout << "wrote dataset to " << gen_out << std::endl;
    } else if (cmd_energy->parsed()) {
        gnfbc::Dataset ds = gnfbc::load_dataset(enf.data_dir);
        const std::string csv = gnfbc::energy_csv(ds, enf.beta_min, enf.beta_max);
        write_file(fs::path(enf.out_dir) / "energy.csv", csv);
        std::cout << "wrote " << (fs::path(enf.out_dir) / "energy.csv").string() << std::endl;
    } else if (cmd_bias->parsed()) {
        gnfbc::Dataset ds = load_with_splits(bf.data_dir, bf.seed);
        gnfbc::ModelStack stack = gnfbc::load_weights(bf.weights);
        gnfbc::BiasRunConfig cfg;
        if (bf.rho_source == "global-heuristic") {
            cfg.source = gnfbc::RhoSource::GlobalHeuristic;
        } else if (bf.rho_source == "file") {
            cfg.source = gnfbc::RhoSource::File;
            if (bf.rho_file.empty()) {
                throw gnfbc::ValidationError("--rho-source file needs --rho-file");
            }
        } else if (bf.rho_source == "attention") {
            cfg.source = gnfbc::RhoSource::Attention;
        } else {
            throw gnfbc::ValidationError("unknown rho source \"" + bf.rho_source +
                                         "\", want global-heuristic/file/attention");
        }
        cfg.rho_file = bf.rho_file;
        cfg.kappa = bf.kappa;
        const std::string json = gnfbc::run_bias(ds, stack, cfg);
        write_file(fs::path(bf.out_dir) / "bias.json", json + "\n");
        std::cout << json << std::endl;
    } else if (cmd_cx->parsed()) {
        gnfbc::ComplexityModel model;
        model.batch = cf.batch;
        model.fanouts = cf.fanouts;
        model.in_dims = cf.in_dims;
        model.out_dims = cf.out_dims;
        const gnfbc::ComplexityEstimate est = gnfbc::complexity_estimate(model);
        nlohmann::json j;
        j["aware"] = est.aware;
        j["agnostic_addend"] = est.agnostic_addend;
        std::cout << j.dump(2) << std::endl;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const gnfbc::NumericError& e) {
        std::cerr << "numerical failure: " << e.what() << std::endl;
        return 2;
    } catch (const gnfbc::ValidationError& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    }
}
