#include "mergesynth/model.hpp"

#include "mergesynth/errors.hpp"
#include "mergesynth/rng.hpp"

#include <cmath>
#include <limits>
#include <thread>

namespace mergesynth {

namespace {

    constexpr double k_neg_inf = -std::numeric_limits<double>::infinity();

    GruParams gru_zeros(std::size_t in, std::size_t hidden) {
        const auto h3 = static_cast<Eigen::Index>(3 * hidden);
        return {Matrix::Zero(h3, static_cast<Eigen::Index>(in)), Matrix::Zero(h3, static_cast<Eigen::Index>(hidden)),
                Matrix::Zero(h3, 1), Matrix::Zero(h3, 1)};
    }

    void fill_uniform(Matrix& m, Rng& rng, double bound) {
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = rng.uniform(-bound, bound);
    }

    void fill_normal(Matrix& m, Rng& rng) {
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = rng.normal();
    }

    double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

    struct CellState {
        Vector r, z, n, g_n, h;
    };

    /// `a` is W x + b_w.
    CellState gru_cell(const GruParams& p, const Vector& a, const Vector& h_prev) {
        const auto hd = static_cast<Eigen::Index>(p.hidden());
        const Vector g = p.u * h_prev + p.b_u.col(0);
        CellState c;
        c.r = (a.head(hd) + g.head(hd)).unaryExpr(&sigmoid);
        c.z = (a.segment(hd, hd) + g.segment(hd, hd)).unaryExpr(&sigmoid);
        c.g_n = g.tail(hd);
        c.n = (a.tail(hd) + c.r.cwiseProduct(c.g_n)).array().tanh().matrix();
        c.h = (Vector::Ones(hd) - c.z).cwiseProduct(c.n) + c.z.cwiseProduct(h_prev);
        return c;
    }

    /// Writes d(loss)/d(a) into `da`, accumulates U / b_u gradients and
    /// returns d(loss)/d(h_prev).
    Vector gru_cell_backward(const GruParams& p, GruParams& g, const CellState& c, const Vector& h_prev,
                             const Vector& dh, Eigen::Ref<Vector> da) {
        const auto hd = static_cast<Eigen::Index>(p.hidden());
        const Vector dn = dh.cwiseProduct(Vector::Ones(hd) - c.z);
        const Vector dz = dh.cwiseProduct(h_prev - c.n);
        Vector dh_prev = dh.cwiseProduct(c.z);
        const Vector dn_pre = dn.array() * (1.0 - c.n.array().square());
        const Vector dr_pre = dn_pre.array() * c.g_n.array() * c.r.array() * (1.0 - c.r.array());
        const Vector dz_pre = dz.array() * c.z.array() * (1.0 - c.z.array());
        da.head(hd) = dr_pre;
        da.segment(hd, hd) = dz_pre;
        da.tail(hd) = dn_pre;
        Vector dg(3 * hd);
        dg.head(hd) = dr_pre;
        dg.segment(hd, hd) = dz_pre;
        dg.tail(hd) = dn_pre.cwiseProduct(c.r);
        g.u.noalias() += dg * h_prev.transpose();
        g.b_u.col(0) += dg;
        dh_prev.noalias() += p.u.transpose() * dg;
        return dh_prev;
    }

    struct SequenceTrace {
        Matrix x_proj;  // 3H x N
        Matrix h;       // H x (N + 1), column 0 is the zero initial state
        std::vector<CellState> cells;
    };

    SequenceTrace gru_sequence(const GruParams& p, const Matrix& x) {
        const auto hd = static_cast<Eigen::Index>(p.hidden());
        const auto n = x.cols();
        SequenceTrace t;
        t.x_proj = p.w * x;
        t.x_proj.colwise() += p.b_w.col(0);
        t.h = Matrix::Zero(hd, n + 1);
        t.cells.reserve(static_cast<std::size_t>(n));
        for (Eigen::Index k = 0; k < n; ++k) {
            t.cells.push_back(gru_cell(p, t.x_proj.col(k), t.h.col(k)));
            t.h.col(k + 1) = t.cells.back().h;
        }
        return t;
    }

    /// `dh_out` holds d(loss)/d(h_k) for k = 1..N. Returns d(loss)/d(x).
    Matrix gru_sequence_backward(const GruParams& p, GruParams& g, const Matrix& x, const SequenceTrace& t,
                                 const Matrix& dh_out) {
        const auto hd = static_cast<Eigen::Index>(p.hidden());
        const auto n = x.cols();
        Matrix da(3 * hd, n);
        Vector dh = Vector::Zero(hd);
        for (Eigen::Index k = n - 1; k >= 0; --k) {
            dh += dh_out.col(k);
            dh = gru_cell_backward(p, g, t.cells[static_cast<std::size_t>(k)], t.h.col(k), dh, da.col(k));
        }
        g.w.noalias() += da * x.transpose();
        g.b_w.col(0) += da.rowwise().sum();
        return p.w.transpose() * da;
    }

    struct StepTrace {
        std::size_t prev = 0;
        std::size_t target = 0;
        Vector h_prev;
        Vector alpha;
        Vector x;
        CellState cell;
        Vector probs;
    };

    StepOutput step_forward(std::size_t prev_slot, const Vector& h_prev, const Matrix& states,
                            const OutputSpace& space, const ModelParams& p, StepTrace* trace) {
        const auto d = p.step_embedding.rows();
        const auto h2 = static_cast<Eigen::Index>(p.dec.hidden());
        Vector x(d + h2);
        x.head(d) = p.step_embedding.col(static_cast<Eigen::Index>(prev_slot));
        Vector alpha;
        if (states.cols() > 0) {
            Vector scores = states.transpose() * h_prev;
            scores.array() -= scores.maxCoeff();
            alpha = scores.array().exp().matrix();
            alpha /= alpha.sum();
            x.tail(h2) = states * alpha;
        } else {
            x.tail(h2).setZero();
        }
        Vector a = p.dec.w * x + p.dec.b_w.col(0);
        CellState cell = gru_cell(p.dec, a, h_prev);

        StepOutput out;
        out.logits = p.out_w * cell.h + p.out_b.col(0);
        double top = k_neg_inf;
        for (Eigen::Index s = 0; s < out.logits.size(); ++s) {
            if (space.valid(static_cast<std::size_t>(s))) {
                top = std::max(top, out.logits(s));
            } else {
                out.logits(s) = k_neg_inf;
            }
        }
        double sum = 0.0;
        for (Eigen::Index s = 0; s < out.logits.size(); ++s) {
            if (out.logits(s) != k_neg_inf) sum += std::exp(out.logits(s) - top);
        }
        const double lse = top + std::log(sum);
        out.log_probs = out.logits.array() - lse;
        out.h = cell.h;
        if (trace != nullptr) {
            trace->prev = prev_slot;
            trace->h_prev = h_prev;
            trace->alpha = std::move(alpha);
            trace->x = std::move(x);
            trace->cell = std::move(cell);
            trace->probs = out.log_probs.array().exp();
        }
        return out;
    }

    Matrix reversed_columns(const Matrix& m) { return m.rowwise().reverse(); }

    double forward_backward(const Sample& sample, const ModelParams& p, ModelParams* grads) {
        if (!sample.mappable) throw UnmappableTarget("resolution has a line found in neither side");
        const auto hd = static_cast<Eigen::Index>(p.enc_fwd.hidden());
        const Matrix x = represent(sample.assembly, p.embedding, p.edit_embedding, p.theta).values;
        const auto n = x.cols();
        const Matrix xr = reversed_columns(x);
        const SequenceTrace fw = gru_sequence(p.enc_fwd, x);
        const SequenceTrace bw = gru_sequence(p.enc_bwd, xr);

        Matrix states(2 * hd, n);
        Vector summary = Vector::Zero(2 * hd);
        if (n > 0) {
            states.topRows(hd) = fw.h.rightCols(n);
            states.bottomRows(hd) = reversed_columns(bw.h.rightCols(n));
            summary.head(hd) = fw.h.col(n);
            summary.tail(hd) = bw.h.col(n);
        }
        const Vector h0 = p.init_w * summary + p.init_b.col(0);

        std::vector<std::size_t> slots = sample.target;
        slots.push_back(sample.space.stop_slot());
        std::vector<StepTrace> traces(grads != nullptr ? slots.size() : 0);
        double total = 0.0;
        Vector h = h0;
        std::size_t prev = p.config.start_slot();
        for (std::size_t t = 0; t < slots.size(); ++t) {
            StepOutput out = step_forward(prev, h, states, sample.space, p, grads != nullptr ? &traces[t] : nullptr);
            total -= out.log_probs(static_cast<Eigen::Index>(slots[t]));
            if (grads != nullptr) traces[t].target = slots[t];
            h = std::move(out.h);
            prev = slots[t];
        }
        if (grads == nullptr) return total;

        ModelParams& g = *grads;
        const auto d = p.step_embedding.rows();
        const auto h2 = 2 * hd;
        Matrix d_states = Matrix::Zero(h2, n);
        Vector dh = Vector::Zero(h2);
        Vector da(3 * h2);
        for (std::size_t t = slots.size(); t-- > 0;) {
            const StepTrace& tr = traces[t];
            Vector dlogits = tr.probs;
            dlogits(static_cast<Eigen::Index>(tr.target)) -= 1.0;
            g.out_w.noalias() += dlogits * tr.cell.h.transpose();
            g.out_b.col(0) += dlogits;
            dh.noalias() += p.out_w.transpose() * dlogits;
            Vector dh_prev = gru_cell_backward(p.dec, g.dec, tr.cell, tr.h_prev, dh, da);
            g.dec.w.noalias() += da * tr.x.transpose();
            g.dec.b_w.col(0) += da;
            const Vector dx = p.dec.w.transpose() * da;
            g.step_embedding.col(static_cast<Eigen::Index>(tr.prev)) += dx.head(d);
            if (n > 0) {
                const Vector dc = dx.tail(h2);
                d_states.noalias() += dc * tr.alpha.transpose();
                const Vector dalpha = states.transpose() * dc;
                const Vector ds = tr.alpha.array() * (dalpha.array() - tr.alpha.dot(dalpha));
                d_states.noalias() += tr.h_prev * ds.transpose();
                dh_prev.noalias() += states * ds;
            }
            dh = std::move(dh_prev);
        }
        g.init_w.noalias() += dh * summary.transpose();
        g.init_b.col(0) += dh;
        if (n == 0) return total;

        const Vector d_summary = p.init_w.transpose() * dh;
        Matrix d_fwd = d_states.topRows(hd);
        Matrix d_bwd = d_states.bottomRows(hd);
        d_fwd.col(n - 1) += d_summary.head(hd);
        d_bwd.col(0) += d_summary.tail(hd);
        Matrix dx = gru_sequence_backward(p.enc_fwd, g.enc_fwd, x, fw, d_fwd);
        dx += reversed_columns(gru_sequence_backward(p.enc_bwd, g.enc_bwd, xr, bw, reversed_columns(d_bwd)));
        represent_backward(sample.assembly, dx, p.embedding, p.edit_embedding, p.theta, g.embedding,
                           g.edit_embedding, g.theta);
        return total;
    }

}  // namespace

ModelParams ModelParams::zeros(const ModelConfig& c) {
    const auto d = static_cast<Eigen::Index>(c.dim);
    const auto h2 = static_cast<Eigen::Index>(2 * c.hidden);
    ModelParams p;
    p.config = c;
    p.embedding = Matrix::Zero(d, static_cast<Eigen::Index>(c.vocab_size));
    p.edit_embedding = Matrix::Zero(d, static_cast<Eigen::Index>(k_edit_symbol_count));
    p.theta = Matrix::Zero(static_cast<Eigen::Index>(theta_size(c.mode)), 1);
    p.enc_fwd = gru_zeros(c.dim, c.hidden);
    p.enc_bwd = gru_zeros(c.dim, c.hidden);
    p.init_w = Matrix::Zero(h2, h2);
    p.init_b = Matrix::Zero(h2, 1);
    p.dec = gru_zeros(c.dim + 2 * c.hidden, 2 * c.hidden);
    p.step_embedding = Matrix::Zero(d, static_cast<Eigen::Index>(2 * c.l_max + 2));
    p.out_w = Matrix::Zero(static_cast<Eigen::Index>(c.outputs()), h2);
    p.out_b = Matrix::Zero(static_cast<Eigen::Index>(c.outputs()), 1);
    return p;
}

ModelParams ModelParams::initialize(const ModelConfig& c) {
    ModelParams p = zeros(c);
    Rng rng(c.seed);
    fill_normal(p.embedding, rng);
    fill_normal(p.edit_embedding, rng);
    for (Eigen::Index k = 0; k + 1 < p.theta.rows(); ++k) p.theta(k, 0) = 1.0;
    for (GruParams* g : {&p.enc_fwd, &p.enc_bwd, &p.dec}) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(g->hidden()));
        fill_uniform(g->w, rng, bound);
        fill_uniform(g->u, rng, bound);
        fill_uniform(g->b_w, rng, bound);
        fill_uniform(g->b_u, rng, bound);
    }
    const double bound = 1.0 / std::sqrt(static_cast<double>(2 * c.hidden));
    fill_uniform(p.init_w, rng, bound);
    fill_normal(p.step_embedding, rng);
    fill_uniform(p.out_w, rng, bound);
    return p;
}

std::vector<std::pair<std::string, Matrix*>> ModelParams::tensors() {
    std::vector<std::pair<std::string, Matrix*>> out = {
        {"embedding", &embedding},
        {"edit_embedding", &edit_embedding},
        {"theta", &theta},
    };
    for (auto [name, g] : {std::pair{"enc_fwd", &enc_fwd}, std::pair{"enc_bwd", &enc_bwd}}) {
        const std::string prefix(name);
        out.emplace_back(prefix + ".w", &g->w);
        out.emplace_back(prefix + ".u", &g->u);
        out.emplace_back(prefix + ".b_w", &g->b_w);
        out.emplace_back(prefix + ".b_u", &g->b_u);
    }
    out.emplace_back("init_w", &init_w);
    out.emplace_back("init_b", &init_b);
    out.emplace_back("dec.w", &dec.w);
    out.emplace_back("dec.u", &dec.u);
    out.emplace_back("dec.b_w", &dec.b_w);
    out.emplace_back("dec.b_u", &dec.b_u);
    out.emplace_back("step_embedding", &step_embedding);
    out.emplace_back("out_w", &out_w);
    out.emplace_back("out_b", &out_b);
    return out;
}

std::vector<std::pair<std::string, const Matrix*>> ModelParams::tensors() const {
    auto mutable_view = const_cast<ModelParams*>(this)->tensors();
    std::vector<std::pair<std::string, const Matrix*>> out;
    out.reserve(mutable_view.size());
    for (auto& [name, m] : mutable_view) out.emplace_back(std::move(name), m);
    return out;
}

std::size_t ModelParams::parameter_count() const {
    std::size_t total = 0;
    for (const auto& [name, m] : tensors()) total += static_cast<std::size_t>(m->size());
    return total;
}

void ModelParams::set_zero() {
    for (auto& [name, m] : tensors()) m->setZero();
}

bool ModelParams::all_finite() const {
    for (const auto& [name, m] : tensors()) {
        if (!m->allFinite()) return false;
    }
    return true;
}

double ModelParams::squared_norm() const {
    double total = 0.0;
    for (const auto& [name, m] : tensors()) total += m->squaredNorm();
    return total;
}

void ModelParams::add_scaled(const ModelParams& other, double s) {
    auto mine = tensors();
    auto theirs = other.tensors();
    for (std::size_t k = 0; k < mine.size(); ++k) {
        if (mine[k].second->rows() != theirs[k].second->rows() || mine[k].second->cols() != theirs[k].second->cols()) {
            throw ShapeMismatch("parameter shapes differ at " + mine[k].first);
        }
        *mine[k].second += s * *theirs[k].second;
    }
}

void ModelParams::scale(double factor) {
    for (auto& [name, m] : tensors()) *m *= factor;
}

std::string to_string(const LineRef& ref) {
    if (ref.is_stop()) return "STOP";
    return "<" + std::to_string(ref.line) + "," + (ref.side == LineRef::Side::a ? "A" : "B") + ">";
}

LineRef OutputSpace::to_ref(std::size_t i) const {
    if (i == 0 || i > li_a + li_b) throw std::out_of_range("line index outside the output space");
    return i <= li_a ? LineRef::of_a(i) : LineRef::of_b(i - li_a);
}

std::size_t OutputSpace::from_ref(const LineRef& ref) const {
    switch (ref.side) {
        case LineRef::Side::a:
            if (ref.line == 0 || ref.line > li_a) break;
            return ref.line;
        case LineRef::Side::b:
            if (ref.line == 0 || ref.line > li_b) break;
            return li_a + ref.line;
        case LineRef::Side::stop: break;
    }
    throw std::out_of_range("reference outside the output space: " + to_string(ref));
}

LineRef OutputSpace::slot_ref(std::size_t slot) const {
    return slot == stop_slot() ? LineRef::stop() : to_ref(slot + 1);
}

std::size_t OutputSpace::ref_slot(const LineRef& ref) const {
    return ref.is_stop() ? stop_slot() : from_ref(ref) - 1;
}

std::vector<LineRef> map_target(const Lines& a, const Lines& b, const Lines& r) {
    std::vector<bool> used_a(a.size()), used_b(b.size());
    auto find = [](const Lines& side, const std::vector<bool>* used, const std::string& line) -> std::size_t {
        for (std::size_t k = 0; k < side.size(); ++k) {
            if (side[k] == line && (used == nullptr || !(*used)[k])) return k + 1;
        }
        return 0;
    };
    std::vector<LineRef> out;
    out.reserve(r.size());
    for (const auto& line : r) {
        if (auto i = find(a, &used_a, line)) {
            used_a[i - 1] = true;
            out.push_back(LineRef::of_a(i));
        } else if (auto j = find(b, &used_b, line)) {
            used_b[j - 1] = true;
            out.push_back(LineRef::of_b(j));
        } else if (auto i2 = find(a, nullptr, line)) {
            out.push_back(LineRef::of_a(i2));
        } else if (auto j2 = find(b, nullptr, line)) {
            out.push_back(LineRef::of_b(j2));
        } else {
            throw UnmappableTarget("line not present in A or B: " + line);
        }
    }
    return out;
}

Lines materialize(std::span<const LineRef> refs, const Lines& a, const Lines& b) {
    Lines out;
    for (const auto& ref : refs) {
        if (ref.is_stop()) break;
        const Lines& side = ref.side == LineRef::Side::a ? a : b;
        if (ref.line == 0 || ref.line > side.size()) throw std::out_of_range("reference outside its side");
        out.push_back(side[ref.line - 1]);
    }
    return out;
}

bool Sample::trainable(const ModelConfig& config) const {
    return mappable && space.fits() && r.size() < config.max_output;
}

Sample prepare_sample(const Lines& a, const Lines& b, const Lines& o, const Lines& r, const Vocabulary& vocab,
                      const ModelConfig& config) {
    Sample s;
    s.a = a;
    s.b = b;
    s.r = r;
    s.assembly = assemble(tokenize(a, b, o, vocab), config.mode);
    s.space = {a.size(), b.size(), config.l_max};
    try {
        const auto refs = map_target(a, b, r);
        if (s.space.fits()) {
            for (const auto& ref : refs) s.target.push_back(s.space.ref_slot(ref));
        }
    } catch (const UnmappableTarget&) {
        s.mappable = false;
    }
    return s;
}

Sample prepare_sample(const MergeTuple& t, const Vocabulary& vocab, const ModelConfig& config) {
    return prepare_sample(t.a, t.b, t.o, t.r, vocab, config);
}

Encoded encode_seq(const Matrix& x, const ModelParams& p) {
    const auto hd = static_cast<Eigen::Index>(p.enc_fwd.hidden());
    const auto n = x.cols();
    const SequenceTrace fw = gru_sequence(p.enc_fwd, x);
    const SequenceTrace bw = gru_sequence(p.enc_bwd, reversed_columns(x));
    Encoded e;
    e.states.resize(2 * hd, n);
    e.summary = Vector::Zero(2 * hd);
    if (n > 0) {
        e.states.topRows(hd) = fw.h.rightCols(n);
        e.states.bottomRows(hd) = reversed_columns(bw.h.rightCols(n));
        e.summary.head(hd) = fw.h.col(n);
        e.summary.tail(hd) = bw.h.col(n);
    }
    return e;
}

Encoded encode_sample(const Assembly& assembly, const ModelParams& p) {
    return encode_seq(represent(assembly, p.embedding, p.edit_embedding, p.theta).values, p);
}

Vector initial_state(const Encoded& enc, const ModelParams& p) { return p.init_w * enc.summary + p.init_b.col(0); }

StepOutput decode_step(std::size_t prev_slot, const Vector& h_prev, const Matrix& states, const OutputSpace& space,
                       const ModelParams& p) {
    return step_forward(prev_slot, h_prev, states, space, p, nullptr);
}

double loss(const Sample& sample, const ModelParams& p) { return forward_backward(sample, p, nullptr); }

double accumulate_gradients(const Sample& sample, const ModelParams& p, ModelParams& grads) {
    return forward_backward(sample, p, &grads);
}

double batch_gradients(std::span<const Sample* const> batch, const ModelParams& p, ModelParams& grads,
                       std::size_t threads) {
    threads = std::max<std::size_t>(1, std::min(threads, batch.size()));
    grads.set_zero();
    double total = 0.0;
    if (threads == 1) {
        for (const Sample* s : batch) total += accumulate_gradients(*s, p, grads);
    } else {
        std::vector<ModelParams> partial(threads, ModelParams::zeros(p.config));
        std::vector<double> losses(threads, 0.0);
        std::vector<std::exception_ptr> errors(threads);
        std::vector<std::thread> workers;
        const std::size_t chunk = (batch.size() + threads - 1) / threads;
        for (std::size_t w = 0; w < threads; ++w) {
            workers.emplace_back([&, w] {
                try {
                    const std::size_t end = std::min(batch.size(), (w + 1) * chunk);
                    for (std::size_t k = w * chunk; k < end; ++k)
                        losses[w] += accumulate_gradients(*batch[k], p, partial[w]);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        for (auto& t : workers) t.join();
        for (auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
        for (std::size_t w = 0; w < threads; ++w) {
            grads.add_scaled(partial[w], 1.0);
            total += losses[w];
        }
    }
    if (!std::isfinite(total) || !grads.all_finite()) throw NonFiniteGradient("loss or gradient is not finite");
    return total;
}

}  // namespace mergesynth
