#pragma once

#include "mergesynth/model.hpp"

#include <vector>

namespace mergesynth {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Adam with bias correction. Moments are kept per tensor of ModelParams.
class Adam {
public:
    explicit Adam(AdamConfig config = {}) : config_(config) {}

    void step(ModelParams& params, const ModelParams& grads);
    std::size_t steps() const { return t_; }
    const AdamConfig& config() const { return config_; }

private:
    AdamConfig config_;
    std::size_t t_ = 0;
    std::vector<Matrix> m_;
    std::vector<Matrix> v_;
};

/// Rescales grads so that their global L2 norm is at most max_norm. Returns
/// the norm before clipping.
double clip_global_norm(ModelParams& grads, double max_norm);

}  // namespace mergesynth
