#pragma once

#include "mergesynth/model.hpp"
#include "mergesynth/optimizer.hpp"

#include <functional>
#include <string>
#include <vector>

namespace mergesynth {

struct TrainConfig {
    std::size_t epochs = 20;
    std::size_t batch_size = 16;
    AdamConfig adam;
    /// Global gradient norm cap; 0 disables clipping.
    double clip_norm = 5.0;
    std::uint64_t seed = 1;
    /// Beam width used to score validation top-1.
    std::size_t beam_width = 1;
    std::size_t threads = 1;
    /// End training once validation top-1 reaches 1.
    bool stop_when_perfect = false;
};

struct EpochLog {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double valid_loss = 0.0;
    double valid_top1 = 0.0;
};

std::string epoch_csv_header();
std::string to_csv_row(const EpochLog& e);

struct Evaluation {
    double loss = 0.0;  // mean over trainable samples
    double top1 = 0.0;  // over all samples; untrainable ones count as misses
    std::size_t samples = 0;
};

/// True when the top-ranked beam hypothesis reproduces the resolution text.
bool top1_correct(const Sample& sample, const ModelParams& p, std::size_t beam_width);
Evaluation evaluate(const std::vector<Sample>& samples, const ModelParams& p, std::size_t beam_width);

struct TrainResult {
    ModelParams best;
    std::size_t best_epoch = 0;
    double best_top1 = 0.0;
    std::vector<EpochLog> log;
};

/// Minibatch Adam under teacher forcing. Epoch 0 scores the initial model.
/// Keeps the parameters with the highest validation top-1 (earliest wins
/// ties); with no validation samples the final parameters are kept.
TrainResult train_model(ModelParams params, const std::vector<Sample>& train, const std::vector<Sample>& valid,
                        const TrainConfig& config, const std::function<void(const EpochLog&)>& on_epoch = {});

}  // namespace mergesynth
