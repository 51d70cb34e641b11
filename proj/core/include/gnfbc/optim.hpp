#pragma once

#include <cstddef>
#include <vector>

#include "gnfbc/matrix.hpp"
#include "gnfbc/rng.hpp"

namespace gnfbc {

/// fan_in x fan_out matrix, entries uniform in +-sqrt(6/(fan_in+fan_out)).
DenseMatrix xavier_init(SeededRng& rng, std::size_t fan_in, std::size_t fan_out);

struct AdamConfig {
    double lr = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Persistent Adam accumulators for a fixed list of parameters. Moment
/// buffers are allocated on the first step; parameter order and shapes must
/// stay stable across steps.
class AdamState {
public:
    explicit AdamState(AdamConfig cfg = {}) : cfg_(cfg) {}

    void step(const std::vector<DenseMatrix*>& params,
              const std::vector<const DenseMatrix*>& grads);

    std::size_t step_count() const { return t_; }
    const AdamConfig& config() const { return cfg_; }

private:
    AdamConfig cfg_;
    std::vector<DenseMatrix> m_;
    std::vector<DenseMatrix> v_;
    std::size_t t_ = 0;
};

} // namespace gnfbc
