#include "gnfbc/complexity.hpp"

#include <string>

#include "gnfbc/errors.hpp"

namespace gnfbc {

ComplexityEstimate complexity_estimate(const ComplexityModel& m) {
    const std::size_t layers = m.fanouts.size();
    if (layers == 0 || m.in_dims.size() != layers || m.out_dims.size() != layers) {
        throw DimensionError("complexity_estimate: fanouts/in_dims/out_dims must share one "
                             "positive length");
    }
    if (m.batch == 0) throw ValidationError("complexity_estimate: batch must be positive");
    ComplexityEstimate est;
    double fanout_prod = 1.0;
    for (std::size_t l = 0; l < layers; ++l) {
        if (m.fanouts[l] == 0 || m.in_dims[l] == 0 || m.out_dims[l] == 0) {
            throw ValidationError("complexity_estimate: zero entry at layer " +
                                  std::to_string(l));
        }
        fanout_prod *= static_cast<double>(m.fanouts[l]);
        const double dense = static_cast<double>(m.in_dims[l]) *
                             static_cast<double>(m.out_dims[l]);
        est.aware += fanout_prod * dense;
        est.agnostic_addend += dense;
    }
    est.aware *= static_cast<double>(m.batch);
    est.agnostic_addend *= static_cast<double>(m.batch);
    return est;
}

} // namespace gnfbc
