#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include "gnfbc/graph.hpp"
#include "gnfbc/matrix.hpp"
#include "gnfbc/rng.hpp"

namespace gnfbc {

struct Split {
    Mask train;
    Mask val;
    Mask test;
};

struct SplitRatios {
    double train = 0.4;
    double val = 0.2;
    double test = 0.4;
};

struct Dataset {
    SparseGraph graph;
    DenseMatrix features;
    Labels labels;
    std::optional<Split> splits;

    std::size_t num_nodes() const { return labels.size(); }
    std::size_t num_classes() const;
};

/// Seeded uniform split: train = round(r.train*N), val = round(r.val*N),
/// test = remainder. Masks come back sorted.
Split make_splits(std::size_t n, const SplitRatios& ratios, SeededRng& rng);
Split make_splits(std::size_t n, const SplitRatios& ratios, std::uint64_t seed);

/// Reads graph.edges, features.csv, labels.txt and, when present,
/// splits.txt from dir. Malformed content reports the file and line.
Dataset load_dataset(const std::string& dir);

/// Writes the same four files (splits.txt only when splits are set) with
/// full double precision so a reload reproduces the dataset exactly.
void write_dataset(const Dataset& ds, const std::string& dir);

/// Planted-partition generator with tunable edge homophily.
struct SynthConfig {
    std::size_t num_nodes = 1000;
    std::size_t num_classes = 4;
    double homophily = 0.7;       // probability an edge joins same-class endpoints
    double mean_degree = 10.0;
    std::size_t feature_dim = 16; // must be >= num_classes (orthogonal class means)
    double separation = 1.0;      // distance of each class mean from the origin
    double noise = 1.0;           // feature noise scale
    std::uint64_t seed = 0;
};

/// Labels uniform over classes; ceil(N*mean_degree/2) distinct edges, each
/// same-class with probability `homophily`; features are the class mean on
/// axis y_i plus Gaussian noise; 40/20/40 splits. Deterministic per config.
Dataset generate_synthetic(const SynthConfig& cfg);

} // namespace gnfbc
