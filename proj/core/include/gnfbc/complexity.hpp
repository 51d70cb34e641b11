#pragma once

#include <cstddef>
#include <vector>

namespace gnfbc {

/// Analytic cost model of fan-out-sampled neighborhood aggregation.
struct ComplexityModel {
    std::size_t batch = 1;
    std::vector<std::size_t> fanouts;     // S_l, one per layer
    std::vector<std::size_t> in_dims;     // d_l
    std::vector<std::size_t> out_dims;    // h_l
};

struct ComplexityEstimate {
    double aware = 0.0;            // B * sum_l (prod_{i<=l} S_i) * d_l * h_l
    double agnostic_addend = 0.0;  // B * sum_l d_l * h_l, the twin's extra cost
};

ComplexityEstimate complexity_estimate(const ComplexityModel& m);

} // namespace gnfbc
