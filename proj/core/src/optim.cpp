#include "gnfbc/optim.hpp"

#include <cmath>
#include <string>

#include "gnfbc/errors.hpp"

namespace gnfbc {

DenseMatrix xavier_init(SeededRng& rng, std::size_t fan_in, std::size_t fan_out) {
    if (fan_in == 0 || fan_out == 0) {
        throw ValidationError("xavier_init: fans must be positive, got " +
                              std::to_string(fan_in) + "/" + std::to_string(fan_out));
    }
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    DenseMatrix w(fan_in, fan_out);
    for (std::size_t i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-bound, bound);
    return w;
}

void AdamState::step(const std::vector<DenseMatrix*>& params,
                     const std::vector<const DenseMatrix*>& grads) {
    if (params.size() != grads.size()) {
        throw DimensionError("adam_step: " + std::to_string(params.size()) + " params vs " +
                             std::to_string(grads.size()) + " grads");
    }
    if (m_.empty()) {
        m_.reserve(params.size());
        v_.reserve(params.size());
        for (const DenseMatrix* p : params) {
            m_.emplace_back(p->rows(), p->cols(), 0.0);
            v_.emplace_back(p->rows(), p->cols(), 0.0);
        }
    }
    if (params.size() != m_.size()) {
        throw DimensionError("adam_step: parameter count changed across steps");
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params.size(); ++k) {
        DenseMatrix& p = *params[k];
        const DenseMatrix& g = *grads[k];
        if (!p.same_shape(g) || !p.same_shape(m_[k])) {
            throw DimensionError("adam_step: shape mismatch at parameter " + std::to_string(k) +
                                 ", " + shape_str(p) + " vs " + shape_str(g));
        }
        double* mp = m_[k].data();
        double* vp = v_[k].data();
        double* pp = p.data();
        const double* gp = g.data();
        for (std::size_t i = 0; i < p.size(); ++i) {
            mp[i] = cfg_.beta1 * mp[i] + (1.0 - cfg_.beta1) * gp[i];
            vp[i] = cfg_.beta2 * vp[i] + (1.0 - cfg_.beta2) * gp[i] * gp[i];
            const double mhat = mp[i] / bc1;
            const double vhat = vp[i] / bc2;
            pp[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

} // namespace gnfbc
