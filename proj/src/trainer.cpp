#include "mergesynth/trainer.hpp"

#include "mergesynth/beam.hpp"
#include "mergesynth/rng.hpp"

#include <sstream>

namespace mergesynth {

std::string epoch_csv_header() { return "epoch,train_loss,valid_loss,valid_top1"; }

std::string to_csv_row(const EpochLog& e) {
    std::ostringstream out;
    out.precision(10);
    out << e.epoch << ',' << e.train_loss << ',' << e.valid_loss << ',' << e.valid_top1;
    return out.str();
}

bool top1_correct(const Sample& sample, const ModelParams& p, std::size_t beam_width) {
    if (!sample.mappable || !sample.space.fits()) return false;
    const auto hyps = beam_search(sample, p, beam_width);
    if (hyps.empty()) return false;
    return materialize(hyps.front().refs(sample.space), sample.a, sample.b) == sample.r;
}

Evaluation evaluate(const std::vector<Sample>& samples, const ModelParams& p, std::size_t beam_width) {
    Evaluation e;
    e.samples = samples.size();
    std::size_t scored = 0, correct = 0;
    for (const auto& s : samples) {
        if (s.trainable(p.config)) {
            e.loss += loss(s, p);
            ++scored;
        }
        if (top1_correct(s, p, beam_width)) ++correct;
    }
    if (scored > 0) e.loss /= static_cast<double>(scored);
    if (!samples.empty()) e.top1 = static_cast<double>(correct) / static_cast<double>(samples.size());
    return e;
}

TrainResult train_model(ModelParams params, const std::vector<Sample>& train, const std::vector<Sample>& valid,
                        const TrainConfig& config, const std::function<void(const EpochLog&)>& on_epoch) {
    std::vector<const Sample*> usable;
    for (const auto& s : train) {
        if (s.trainable(params.config)) usable.push_back(&s);
    }
    Rng rng(config.seed);
    Adam adam(config.adam);
    ModelParams grads = ModelParams::zeros(params.config);
    const std::size_t batch = std::max<std::size_t>(1, config.batch_size);

    TrainResult result;
    auto record = [&](EpochLog log) {
        const Evaluation v = evaluate(valid, params, config.beam_width);
        log.valid_loss = v.loss;
        log.valid_top1 = v.top1;
        result.log.push_back(log);
        if (on_epoch) on_epoch(log);
        if (valid.empty() || log.epoch == 0 || log.valid_top1 > result.best_top1) {
            result.best = params;
            result.best_epoch = log.epoch;
            result.best_top1 = log.valid_top1;
        }
    };

    EpochLog initial;
    for (const Sample* s : usable) initial.train_loss += loss(*s, params);
    if (!usable.empty()) initial.train_loss /= static_cast<double>(usable.size());
    record(initial);

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        if (config.stop_when_perfect && !valid.empty() && result.best_top1 >= 1.0) break;
        rng.shuffle(usable);
        EpochLog log;
        log.epoch = epoch;
        for (std::size_t at = 0; at < usable.size(); at += batch) {
            const std::size_t end = std::min(usable.size(), at + batch);
            log.train_loss += batch_gradients(std::span(usable).subspan(at, end - at), params, grads, config.threads);
            clip_global_norm(grads, config.clip_norm);
            adam.step(params, grads);
        }
        if (!usable.empty()) log.train_loss /= static_cast<double>(usable.size());
        record(log);
    }
    return result;
}

}  // namespace mergesynth
