#include "mergesynth/evaluation.hpp"

#include "mergesynth/resolver.hpp"

#include <exception>
#include <thread>

namespace mergesynth {

namespace {

    template <class F>
    void parallel_for(std::size_t count, std::size_t threads, F&& body) {
        threads = std::max<std::size_t>(1, std::min(threads, count));
        if (threads == 1) {
            for (std::size_t i = 0; i < count; ++i) body(i);
            return;
        }
        std::vector<std::thread> workers;
        std::vector<std::exception_ptr> errors(threads);
        for (std::size_t w = 0; w < threads; ++w) {
            workers.emplace_back([&, w] {
                try {
                    for (std::size_t i = w; i < count; i += threads) body(i);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        for (auto& t : workers) t.join();
        for (auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }

}  // namespace

std::vector<SampleResult> model_results(std::span<const MergeTuple> tuples, const Model& model, std::size_t k,
                                        std::size_t threads) {
    std::vector<SampleResult> out(tuples.size());
    parallel_for(tuples.size(), threads, [&](std::size_t i) {
        const MergeTuple& t = tuples[i];
        const ConflictRegion region{t.a, t.o, t.b, {}, {}, {}};
        RegionResolution res = resolve_region(region, model, {k, 0.0});
        std::vector<Lines> candidates;
        std::vector<double> confidences;
        for (auto& c : res.candidates) {
            candidates.push_back(std::move(c.text));
            confidences.push_back(c.confidence);
        }
        out[i] = make_result(t.a, t.b, t.r, std::move(candidates), std::move(confidences), model.vocab);
    });
    return out;
}

std::vector<SampleResult> scanmerge_results(std::span<const MergeTuple> tuples, const Vocabulary& vocab,
                                            const ValidityPredicate& valid, std::size_t trials, std::uint64_t seed,
                                            std::size_t k) {
    std::vector<SampleResult> out;
    out.reserve(tuples.size());
    for (std::size_t i = 0; i < tuples.size(); ++i) {
        const MergeTuple& t = tuples[i];
        std::vector<Lines> candidates;
        std::vector<double> confidences;
        for (auto& c : scan_merge(t.a, t.b, trials, seed + i, valid, k)) {
            candidates.push_back(std::move(c.text));
            confidences.push_back(c.confidence);
        }
        out.push_back(make_result(t.a, t.b, t.r, std::move(candidates), std::move(confidences), vocab));
    }
    return out;
}

EvalReport scanmerge_report(std::span<const MergeTuple> tuples, const Vocabulary& vocab,
                            const ValidityPredicate& valid, const ScanMergeOptions& options,
                            std::span<const double> grid) {
    std::vector<EvalReport> runs;
    for (std::size_t run = 0; run < std::max<std::size_t>(1, options.runs); ++run) {
        const auto results =
            scanmerge_results(tuples, vocab, valid, options.trials, options.seed + run * 1000003u, options.k);
        runs.push_back(build_report("scanmerge", results, grid));
    }
    return average_reports(runs);
}

}  // namespace mergesynth
