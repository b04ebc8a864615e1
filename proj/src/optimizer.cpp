#include "mergesynth/optimizer.hpp"

#include "mergesynth/errors.hpp"

#include <cmath>

namespace mergesynth {

void Adam::step(ModelParams& params, const ModelParams& grads) {
    auto p = params.tensors();
    auto g = grads.tensors();
    if (m_.empty()) {
        for (const auto& [name, t] : p) {
            m_.push_back(Matrix::Zero(t->rows(), t->cols()));
            v_.push_back(Matrix::Zero(t->rows(), t->cols()));
        }
    }
    if (p.size() != m_.size()) throw ShapeMismatch("optimizer state does not match the parameters");
    ++t_;
    const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < p.size(); ++k) {
        const Matrix& gk = *g[k].second;
        if (gk.rows() != m_[k].rows() || gk.cols() != m_[k].cols()) {
            throw ShapeMismatch("gradient shape differs at " + p[k].first);
        }
        m_[k] = config_.beta1 * m_[k] + (1.0 - config_.beta1) * gk;
        v_[k] = config_.beta2 * v_[k] + (1.0 - config_.beta2) * gk.cwiseProduct(gk);
        p[k].second->array() -=
            config_.lr * (m_[k].array() / c1) / ((v_[k].array() / c2).sqrt() + config_.eps);
    }
}

double clip_global_norm(ModelParams& grads, double max_norm) {
    const double norm = std::sqrt(grads.squared_norm());
    if (max_norm > 0.0 && norm > max_norm) grads.scale(max_norm / norm);
    return norm;
}

}  // namespace mergesynth
