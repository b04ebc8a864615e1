#pragma once

#include "mergesynth/model.hpp"

#include <vector>

namespace mergesynth {

struct Hypothesis {
    std::vector<std::size_t> slots;  // without STOP
    double score = 0.0;              // summed step log-probabilities
    bool stopped = false;            // false when cut at the length bound

    std::vector<LineRef> refs(const OutputSpace& space) const;
};

/// The sequence probability, unnormalized by length.
double confidence_of(double score);

/// Ranked by score, then fewer lines (earlier STOP), then slot order.
bool ranks_before(const Hypothesis& x, const Hypothesis& y);

/// Up to k finished hypotheses. A hypothesis finishes on STOP or after
/// max_length lines. Throws std::invalid_argument when k is zero.
std::vector<Hypothesis> beam_search(const Assembly& assembly, const OutputSpace& space, const ModelParams& p,
                                    std::size_t k, std::size_t max_length);
std::vector<Hypothesis> beam_search(const Sample& sample, const ModelParams& p, std::size_t k);

}  // namespace mergesynth
