#pragma once

#include "mergesynth/merge_matrix.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace mergesynth {

struct ModelConfig {
    Representation mode = Representation::aligned_linearized;
    std::size_t dim = 64;
    std::size_t hidden = 64;
    /// Per-side line cap of the output space.
    std::size_t l_max = 30;
    /// Longest emitted resolution, in lines (C).
    std::size_t max_output = 30;
    std::size_t vocab_size = Vocabulary::base_size;
    std::uint64_t seed = 1;

    std::size_t outputs() const { return 2 * l_max + 1; }
    std::size_t stop_slot() const { return 2 * l_max; }
    std::size_t start_slot() const { return 2 * l_max + 1; }

    bool operator==(const ModelConfig&) const = default;
};

/// PyTorch gate layout: rows are [reset; update; candidate].
struct GruParams {
    Matrix w;    // 3H x in
    Matrix u;    // 3H x H
    Matrix b_w;  // 3H x 1
    Matrix b_u;  // 3H x 1

    std::size_t hidden() const { return static_cast<std::size_t>(u.cols()); }
};

struct ModelParams {
    ModelConfig config;
    Matrix embedding;       // D x |V|
    Matrix edit_embedding;  // D x 6
    Matrix theta;           // (s+1) x 1, empty for concatenating modes
    GruParams enc_fwd;
    GruParams enc_bwd;
    Matrix init_w;  // 2H x 2H
    Matrix init_b;  // 2H x 1
    GruParams dec;  // input D + 2H, hidden 2H
    Matrix step_embedding;  // D x (2 L_max + 2), last column is START
    Matrix out_w;           // (2 L_max + 1) x 2H
    Matrix out_b;

    /// All parameters zero, shapes from the config.
    static ModelParams zeros(const ModelConfig& config);
    static ModelParams initialize(const ModelConfig& config);

    /// Stable order; names are used in checkpoints.
    std::vector<std::pair<std::string, Matrix*>> tensors();
    std::vector<std::pair<std::string, const Matrix*>> tensors() const;

    std::size_t parameter_count() const;
    void set_zero();
    bool all_finite() const;
    double squared_norm() const;
    void add_scaled(const ModelParams& other, double scale);
    void scale(double factor);
};

/// A line of A, a line of B (1-based), or STOP.
struct LineRef {
    enum class Side { a, b, stop };
    Side side = Side::stop;
    std::size_t line = 0;

    static LineRef stop() { return {}; }
    static LineRef of_a(std::size_t line) { return {Side::a, line}; }
    static LineRef of_b(std::size_t line) { return {Side::b, line}; }
    bool is_stop() const { return side == Side::stop; }

    bool operator==(const LineRef&) const = default;
};

/// "<3,A>", "<1,B>" or "STOP".
std::string to_string(const LineRef& ref);

/// The per-instance view of the fixed 2 L_max + 1 logits. Slot s < 2 L_max is
/// index i = s + 1 of L; slot 2 L_max is STOP.
struct OutputSpace {
    std::size_t li_a = 0;
    std::size_t li_b = 0;
    std::size_t l_max = 0;

    std::size_t dimension() const { return 2 * l_max + 1; }
    std::size_t stop_slot() const { return 2 * l_max; }
    bool valid(std::size_t slot) const { return slot == stop_slot() || slot < li_a + li_b; }
    std::size_t valid_count() const { return li_a + li_b + 1; }
    bool fits() const { return li_a <= l_max && li_b <= l_max; }

    /// i in 1..li_a+li_b.
    LineRef to_ref(std::size_t i) const;
    std::size_t from_ref(const LineRef& ref) const;

    LineRef slot_ref(std::size_t slot) const;
    std::size_t ref_slot(const LineRef& ref) const;
};

/// Each target line becomes its first unused occurrence in A, else in B,
/// else its first occurrence in A, else in B. Throws UnmappableTarget.
std::vector<LineRef> map_target(const Lines& a, const Lines& b, const Lines& r);

/// Lines named by refs; STOP ends the sequence.
Lines materialize(std::span<const LineRef> refs, const Lines& a, const Lines& b);

/// A tokenized, aligned training or evaluation instance.
struct Sample {
    Lines a;
    Lines b;
    Lines r;
    Assembly assembly;
    OutputSpace space;
    /// Target slots without the final STOP; empty when r is unmappable.
    std::vector<std::size_t> target;
    bool mappable = true;

    /// Inputs fit L_max and the target is shorter than C.
    bool trainable(const ModelConfig& config) const;
};

Sample prepare_sample(const Lines& a, const Lines& b, const Lines& o, const Lines& r, const Vocabulary& vocab,
                      const ModelConfig& config);
Sample prepare_sample(const MergeTuple& tuple, const Vocabulary& vocab, const ModelConfig& config);

struct Encoded {
    Matrix states;   // 2H x N, column n is [forward_n; backward_n]
    Vector summary;  // [forward_{N-1}; backward_0], zero when N = 0
};

Encoded encode_seq(const Matrix& x, const ModelParams& p);
Encoded encode_sample(const Assembly& assembly, const ModelParams& p);

/// Affine map of the encoder summary.
Vector initial_state(const Encoded& enc, const ModelParams& p);

struct StepOutput {
    Vector logits;     // masked entries are -inf
    Vector log_probs;  // masked entries are -inf
    Vector h;
};

StepOutput decode_step(std::size_t prev_slot, const Vector& h_prev, const Matrix& states, const OutputSpace& space,
                       const ModelParams& p);

/// Summed negative log-likelihood of target + STOP under teacher forcing.
/// Throws UnmappableTarget for an unmappable sample.
double loss(const Sample& sample, const ModelParams& p);

/// Adds d(loss)/d(params) to `grads` and returns the loss.
double accumulate_gradients(const Sample& sample, const ModelParams& p, ModelParams& grads);

/// Sum of per-sample gradients, reduced in sample order over `threads`
/// contiguous chunks. Overwrites `grads`. Throws NonFiniteGradient.
double batch_gradients(std::span<const Sample* const> batch, const ModelParams& p, ModelParams& grads,
                       std::size_t threads = 1);

}  // namespace mergesynth
