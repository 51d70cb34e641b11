#include "gnfbc/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gnfbc/errors.hpp"

namespace gnfbc {

namespace {

std::string loc(const std::string& file, std::size_t line) {
    return file + ":" + std::to_string(line);
}

std::string strip_comment(std::string line) {
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    return line;
}

bool blank(const std::string& s) {
    return s.find_first_not_of(" \t\r\n") == std::string::npos;
}

std::vector<std::string> read_content_lines(const std::string& path, bool allow_comments,
                                            std::vector<std::size_t>* linenos = nullptr) {
    std::ifstream is(path);
    if (!is) throw ValidationError("cannot open " + path);
    std::vector<std::string> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(is, line)) {
        ++n;
        if (allow_comments) line = strip_comment(line);
        if (blank(line)) continue;
        out.push_back(line);
        if (linenos) linenos->push_back(n);
    }
    return out;
}

} // namespace

std::size_t Dataset::num_classes() const {
    int top = -1;
    for (int y : labels) top = std::max(top, y);
    return static_cast<std::size_t>(top + 1);
}

Split make_splits(std::size_t n, const SplitRatios& ratios, SeededRng& rng) {
    const double sum = ratios.train + ratios.val + ratios.test;
    if (std::abs(sum - 1.0) > 1e-9) {
        throw ValidationError("make_splits: ratios sum to " + std::to_string(sum) +
                              ", expected 1");
    }
    if (ratios.train < 0.0 || ratios.val < 0.0 || ratios.test < 0.0) {
        throw ValidationError("make_splits: negative ratio");
    }
    std::vector<std::uint32_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<std::uint32_t>(i);
    for (std::size_t i = n; i > 1; --i) {
        std::swap(order[i - 1], order[rng.below(i)]);
    }
    const auto n_train = static_cast<std::size_t>(
        std::llround(ratios.train * static_cast<double>(n)));
    const auto n_val = static_cast<std::size_t>(
        std::llround(ratios.val * static_cast<double>(n)));
    Split s;
    s.train.assign(order.begin(), order.begin() + n_train);
    s.val.assign(order.begin() + n_train, order.begin() + std::min(n, n_train + n_val));
    s.test.assign(order.begin() + std::min(n, n_train + n_val), order.end());
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.val.begin(), s.val.end());
    std::sort(s.test.begin(), s.test.end());
    return s;
}

Split make_splits(std::size_t n, const SplitRatios& ratios, std::uint64_t seed) {
    SeededRng rng(seed);
    return make_splits(n, ratios, rng);
}

Dataset load_dataset(const std::string& dir) {
    namespace fs = std::filesystem;
    const std::string feat_path = (fs::path(dir) / "features.csv").string();
    const std::string label_path = (fs::path(dir) / "labels.txt").string();
    const std::string edge_path = (fs::path(dir) / "graph.edges").string();
    const std::string split_path = (fs::path(dir) / "splits.txt").string();

    Dataset ds;

    // features.csv: one comma-separated row per node
    {
        std::vector<std::size_t> lines;
        const auto rows = read_content_lines(feat_path, false, &lines);
        if (rows.empty()) throw FormatError(feat_path + ": no feature rows");
        std::vector<std::vector<double>> parsed;
        for (std::size_t r = 0; r < rows.size(); ++r) {
            std::vector<double> vals;
            std::stringstream ss(rows[r]);
            std::string cell;
            while (std::getline(ss, cell, ',')) {
                try {
                    std::size_t used = 0;
                    vals.push_back(std::stod(cell, &used));
                    while (used < cell.size() &&
                           (cell[used] == ' ' || cell[used] == '\t' || cell[used] == '\r')) {
                        ++used;
                    }
                    if (used != cell.size()) throw std::invalid_argument(cell);
                } catch (const std::exception&) {
                    throw FormatError(loc(feat_path, lines[r]) + ": bad value \"" + cell + "\"");
                }
            }
            if (!parsed.empty() && vals.size() != parsed.front().size()) {
                throw FormatError(loc(feat_path, lines[r]) + ": row has " +
                                  std::to_string(vals.size()) + " values, first row has " +
                                  std::to_string(parsed.front().size()));
            }
            parsed.push_back(std::move(vals));
        }
        ds.features = DenseMatrix(parsed.size(), parsed.front().size());
        for (std::size_t i = 0; i < parsed.size(); ++i) {
            for (std::size_t j = 0; j < parsed[i].size(); ++j) ds.features(i, j) = parsed[i][j];
        }
    }
    const std::size_t n = ds.features.rows();

    // labels.txt: one integer per node
    {
        std::vector<std::size_t> lines;
        const auto rows = read_content_lines(label_path, false, &lines);
        if (rows.size() != n) {
            throw FormatError(label_path + ": " + std::to_string(rows.size()) +
                              " labels for " + std::to_string(n) + " feature rows");
        }
        for (std::size_t r = 0; r < rows.size(); ++r) {
            long y = 0;
            std::istringstream ss(rows[r]);
            std::string extra;
            if (!(ss >> y) || (ss >> extra)) {
                throw FormatError(loc(label_path, lines[r]) + ": expected one integer");
            }
            if (y < 0) {
                throw ValidationError(loc(label_path, lines[r]) + ": negative label " +
                                      std::to_string(y));
            }
            ds.labels.push_back(static_cast<int>(y));
        }
    }

    // graph.edges: "u v" pairs, '#' comments
    {
        std::vector<std::size_t> lines;
        const auto rows = read_content_lines(edge_path, true, &lines);
        EdgeList edges;
        for (std::size_t r = 0; r < rows.size(); ++r) {
            long long u = 0, v = 0;
            std::istringstream ss(rows[r]);
            std::string extra;
            if (!(ss >> u >> v) || (ss >> extra)) {
                throw FormatError(loc(edge_path, lines[r]) + ": expected \"u v\"");
            }
            if (u < 0 || v < 0 || static_cast<std::size_t>(u) >= n ||
                static_cast<std::size_t>(v) >= n) {
                throw ValidationError(loc(edge_path, lines[r]) + ": node index out of range " +
                                      "[0," + std::to_string(n) + ")");
            }
            edges.emplace_back(static_cast<std::uint32_t>(u), static_cast<std::uint32_t>(v));
        }
        ds.graph = SparseGraph::from_edges(n, edges);
    }

    // splits.txt (optional): train/val/test tag per node
    if (fs::exists(split_path)) {
        std::vector<std::size_t> lines;
        const auto rows = read_content_lines(split_path, false, &lines);
        if (rows.size() != n) {
            throw FormatError(split_path + ": " + std::to_string(rows.size()) +
                              " split tags for " + std::to_string(n) + " nodes");
        }
        Split s;
        for (std::size_t r = 0; r < rows.size(); ++r) {
            std::istringstream ss(rows[r]);
            std::string tag, extra;
            if (!(ss >> tag) || (ss >> extra)) {
                throw FormatError(loc(split_path, lines[r]) + ": expected one tag");
            }
            const auto node = static_cast<std::uint32_t>(r);
            if (tag == "train") {
                s.train.push_back(node);
            } else if (tag == "val") {
                s.val.push_back(node);
            } else if (tag == "test") {
                s.test.push_back(node);
            } else {
                throw FormatError(loc(split_path, lines[r]) + ": unknown tag \"" + tag +
                                  "\", want train/val/test");
            }
        }
        ds.splits = std::move(s);
    }
    return ds;
}

void write_dataset(const Dataset& ds, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    {
        std::ofstream os(fs::path(dir) / "features.csv");
        char buf[64];
        for (std::size_t i = 0; i < ds.features.rows(); ++i) {
            for (std::size_t j = 0; j < ds.features.cols(); ++j) {
                std::snprintf(buf, sizeof(buf), "%.17g", ds.features(i, j));
                os << (j ? "," : "") << buf;
            }
            os << '\n';
        }
        if (!os) throw ValidationError("failed writing features.csv under " + dir);
    }
    {
        std::ofstream os(fs::path(dir) / "labels.txt");
        for (int y : ds.labels) os << y << '\n';
        if (!os) throw ValidationError("failed writing labels.txt under " + dir);
    }
    {
        std::ofstream os(fs::path(dir) / "graph.edges");
        for (const auto& [u, v] : ds.graph.edge_pairs()) os << u << ' ' << v << '\n';
        if (!os) throw ValidationError("failed writing graph.edges under " + dir);
    }
    if (ds.splits.has_value()) {
        std::vector<const char*> tag(ds.num_nodes(), nullptr);
        for (std::uint32_t i : ds.splits->train) tag[i] = "train";
        for (std::uint32_t i : ds.splits->val) tag[i] = "val";
        for (std::uint32_t i : ds.splits->test) tag[i] = "test";
        std::ofstream os(fs::path(dir) / "splits.txt");
        for (std::size_t i = 0; i < tag.size(); ++i) {
            if (tag[i] == nullptr) {
                throw ValidationError("write_dataset: node " + std::to_string(i) +
                                      " is in no split");
            }
            os << tag[i] << '\n';
        }
        if (!os) throw ValidationError("failed writing splits.txt under " + dir);
    }
}

Dataset generate_synthetic(const SynthConfig& cfg) {
    if (cfg.num_classes < 2 || cfg.num_nodes < cfg.num_classes) {
        throw ValidationError("generate_synthetic: need num_nodes >= num_classes >= 2");
    }
    if (cfg.homophily < 0.0 || cfg.homophily > 1.0) {
        throw ValidationError("generate_synthetic: homophily must lie in [0,1]");
    }
    if (cfg.mean_degree < 1.0) {
        throw ValidationError("generate_synthetic: mean degree must be >= 1");
    }
    if (cfg.feature_dim < cfg.num_classes) {
        throw ValidationError("generate_synthetic: feature_dim " +
                              std::to_string(cfg.feature_dim) + " cannot hold " +
                              std::to_string(cfg.num_classes) + " orthogonal class means");
    }
    const std::size_t n = cfg.num_nodes;
    const auto target_edges = static_cast<std::size_t>(
        std::ceil(static_cast<double>(n) * cfg.mean_degree / 2.0));
    if (target_edges > n * (n - 1) / 2) {
        throw ValidationError("generate_synthetic: " + std::to_string(target_edges) +
                              " edges exceed simple-graph capacity of " +
                              std::to_string(n * (n - 1) / 2));
    }

    SeededRng rng(cfg.seed);
    Dataset ds;
    ds.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        ds.labels[i] = static_cast<int>(rng.below(cfg.num_classes));
    }

    std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
    EdgeList edges;
    const std::size_t retry_cap = 1000 * (target_edges + n);
    std::size_t attempts = 0;
    while (edges.size() < target_edges) {
        // One coin per edge decides its type; the pair is then drawn uniform
        // over admissible pairs of that type. Re-flipping on rejected draws
        // would skew realized homophily toward the more plentiful pair type.
        const bool same = rng.bernoulli(cfg.homophily);
        while (true) {
            if (++attempts > retry_cap) {
                throw ValidationError("generate_synthetic: could not place " +
                                      std::to_string(target_edges) +
                                      " edges; graph too dense for the requested homophily");
            }
            const auto u = static_cast<std::uint32_t>(rng.below(n));
            const auto v = static_cast<std::uint32_t>(rng.below(n));
            if (u == v) continue;
            if ((ds.labels[u] == ds.labels[v]) != same) continue;
            const std::pair<std::uint32_t, std::uint32_t> key{std::min(u, v), std::max(u, v)};
            if (!seen.insert(key).second) continue;
            edges.emplace_back(key.first, key.second);
            break;
        }
    }
    ds.graph = SparseGraph::from_edges(n, edges);

    ds.features = DenseMatrix(n, cfg.feature_dim);
    for (std::size_t i = 0; i < n; ++i) {
        const auto axis = static_cast<std::size_t>(ds.labels[i]);
        for (std::size_t j = 0; j < cfg.feature_dim; ++j) {
            ds.features(i, j) = (j == axis ? cfg.separation : 0.0) + cfg.noise * rng.normal();
        }
    }

    ds.splits = make_splits(n, SplitRatios{}, rng);
    return ds;
}

} // namespace gnfbc
