#include "mergesynth/beam.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mergesynth {

namespace {

    struct Live {
        Hypothesis hyp;
        Vector h;
        std::size_t prev = 0;
    };

    struct Candidate {
        std::size_t parent = 0;
        std::size_t slot = 0;
        bool stop = false;
        double score = 0.0;
    };

}  // namespace

std::vector<LineRef> Hypothesis::refs(const OutputSpace& space) const {
    std::vector<LineRef> out;
    out.reserve(slots.size() + 1);
    for (auto s : slots) out.push_back(space.slot_ref(s));
    if (stopped) out.push_back(LineRef::stop());
    return out;
}

double confidence_of(double score) { return std::exp(score); }

bool ranks_before(const Hypothesis& x, const Hypothesis& y) {
    if (x.score != y.score) return x.score > y.score;
    if (x.slots.size() != y.slots.size()) return x.slots.size() < y.slots.size();
    return x.slots < y.slots;
}

std::vector<Hypothesis> beam_search(const Assembly& assembly, const OutputSpace& space, const ModelParams& p,
                                    std::size_t k, std::size_t max_length) {
    if (k == 0) throw std::invalid_argument("beam width must be at least 1");
    const Encoded enc = encode_sample(assembly, p);
    std::vector<Live> live{{Hypothesis{}, initial_state(enc, p), p.config.start_slot()}};
    std::vector<Hypothesis> finished;
    if (max_length == 0) {
        finished.push_back(std::move(live.front().hyp));
        live.clear();
    }

    auto candidate_before = [&](const Candidate& x, const Candidate& y) {
        if (x.score != y.score) return x.score > y.score;
        const auto& px = live[x.parent].hyp.slots;
        const auto& py = live[y.parent].hyp.slots;
        const std::size_t lx = px.size() + (x.stop ? 0 : 1);
        const std::size_t ly = py.size() + (y.stop ? 0 : 1);
        if (lx != ly) return lx < ly;
        std::vector<std::size_t> sx = px, sy = py;
        if (!x.stop) sx.push_back(x.slot);
        if (!y.stop) sy.push_back(y.slot);
        if (sx != sy) return sx < sy;
        return x.stop && !y.stop;
    };

    while (!live.empty()) {
        if (finished.size() >= k) {
            std::sort(finished.begin(), finished.end(), ranks_before);
            double best_live = live.front().hyp.score;
            for (const auto& l : live) best_live = std::max(best_live, l.hyp.score);
            if (finished[k - 1].score >= best_live) break;
        }
        std::vector<Candidate> cands;
        std::vector<Vector> next_h(live.size());
        for (std::size_t i = 0; i < live.size(); ++i) {
            StepOutput out = decode_step(live[i].prev, live[i].h, enc.states, space, p);
            for (std::size_t s = 0; s < space.dimension(); ++s) {
                if (!space.valid(s)) continue;
                cands.push_back({i, s, s == space.stop_slot(), live[i].hyp.score + out.log_probs(static_cast<Eigen::Index>(s))});
            }
            next_h[i] = std::move(out.h);
        }
        const std::size_t keep = std::min(k, cands.size());
        std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep), cands.end(),
                          candidate_before);
        std::vector<Live> next;
        for (std::size_t c = 0; c < keep; ++c) {
            const Candidate& cand = cands[c];
            Hypothesis hyp{live[cand.parent].hyp.slots, cand.score, cand.stop};
            if (cand.stop) {
                finished.push_back(std::move(hyp));
                continue;
            }
            hyp.slots.push_back(cand.slot);
            if (hyp.slots.size() >= max_length) {
                finished.push_back(std::move(hyp));
            } else {
                next.push_back({std::move(hyp), next_h[cand.parent], cand.slot});
            }
        }
        live = std::move(next);
    }
    std::sort(finished.begin(), finished.end(), ranks_before);
    if (finished.size() > k) finished.resize(k);
    return finished;
}

std::vector<Hypothesis> beam_search(const Sample& sample, const ModelParams& p, std::size_t k) {
    return beam_search(sample.assembly, sample.space, p, k, p.config.max_output);
}

}  // namespace mergesynth
