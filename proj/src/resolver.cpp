#include "mergesynth/resolver.hpp"

#include "mergesynth/beam.hpp"

#include <algorithm>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace mergesynth {

namespace {

    void show_region(std::ostream& out, std::size_t index, const ConflictRegion& region) {
        out << "region " << index + 1 << "\n";
        for (const auto& [name, lines] : {std::pair{"A", &region.a_lines}, std::pair{"base", &region.o_lines},
                                          std::pair{"B", &region.b_lines}}) {
            out << "  " << name << ":\n";
            for (const auto& line : *lines) out << "    " << line << "\n";
        }
    }

    void show_candidates(std::ostream& out, const std::vector<ResolutionCandidate>& candidates) {
        for (std::size_t c = 0; c < candidates.size(); ++c) {
            out << "  [" << c + 1 << "] confidence " << std::fixed << std::setprecision(4)
                << candidates[c].confidence << "\n";
            out.unsetf(std::ios::floatfield);
            for (const auto& line : candidates[c].text) out << "    " << line << "\n";
        }
    }

    /// Index of the chosen candidate, nullopt for skip; sets abort on q/EOF.
    std::optional<std::size_t> ask(Prompt& prompt, std::size_t count, bool& abort) {
        std::string answer;
        while (true) {
            prompt.out << "accept [1-" << count << "], s to skip, q to quit: " << std::flush;
            if (!std::getline(prompt.in, answer)) {
                abort = true;
                return std::nullopt;
            }
            if (answer == "s") return std::nullopt;
            if (answer == "q") {
                abort = true;
                return std::nullopt;
            }
            std::size_t pos = 0;
            try {
                const auto choice = std::stoul(answer, &pos);
                if (pos == answer.size() && choice >= 1 && choice <= count) return choice - 1;
            } catch (const std::exception&) {
            }
        }
    }

}  // namespace

RegionResolution resolve_region(const ConflictRegion& region, const Model& model, const ResolveOptions& options) {
    if (options.k == 0) throw std::invalid_argument("k must be at least 1");
    const ModelParams& p = model.params;
    RegionResolution out;
    const OutputSpace space{region.a_lines.size(), region.b_lines.size(), p.config.l_max};
    if (!space.fits()) {
        out.abstain_reason = "region too large: a side exceeds " + std::to_string(p.config.l_max) + " lines";
        return out;
    }
    const Assembly assembly =
        assemble(tokenize(region.a_lines, region.b_lines, region.o_lines, model.vocab), p.config.mode);
    for (const auto& hyp : beam_search(assembly, space, p, options.k, p.config.max_output)) {
        ResolutionCandidate c;
        c.refs = hyp.refs(space);
        c.text = materialize(c.refs, region.a_lines, region.b_lines);
        c.confidence = confidence_of(hyp.score);
        if (c.confidence < options.threshold) continue;
        const bool duplicate = std::any_of(out.candidates.begin(), out.candidates.end(),
                                           [&](const ResolutionCandidate& seen) { return seen.text == c.text; });
        if (!duplicate) out.candidates.push_back(std::move(c));
    }
    if (out.candidates.empty()) out.abstain_reason = "no candidate reaches the confidence threshold";
    return out;
}

std::size_t FileReport::resolved_count() const {
    return static_cast<std::size_t>(std::count_if(regions.begin(), regions.end(), [](const RegionOutcome& r) {
        return r.status == RegionStatus::resolved;
    }));
}

int FileReport::exit_code() const {
    const std::size_t resolved = resolved_count();
    if (resolved == regions.size()) return 0;
    return resolved > 0 ? 1 : 2;
}

std::string FileReport::to_text() const {
    std::ostringstream out;
    for (const auto& r : regions) {
        out << "region " << r.index + 1 << ": ";
        switch (r.status) {
            case RegionStatus::resolved:
                out << "resolved (confidence " << std::setprecision(4) << r.applied->confidence << ")";
                break;
            case RegionStatus::abstained: out << "abstained (" << r.detail << ")"; break;
            case RegionStatus::skipped: out << "skipped"; break;
        }
        out << "\n";
    }
    out << resolved_count() << " of " << regions.size() << " regions resolved";
    if (aborted) out << " (aborted)";
    out << "\n";
    return out.str();
}

FileResolution resolve_file(std::string_view text, const Model& model, const ResolveOptions& options,
                            Prompt* prompt) {
    const ParsedConflicts parsed = parse_conflicts_with_spans(text);
    const auto regions = parsed.document.conflicts();
    const std::string terminator = parsed.document.terminator == LineEnding::crlf ? "\r\n" : "\n";
    FileResolution result;
    std::size_t copied = 0;
    for (std::size_t i = 0; i < regions.size(); ++i) {
        const ByteSpan span = parsed.spans[i];
        RegionOutcome outcome;
        outcome.index = i;
        if (result.report.aborted) {
            outcome.status = RegionStatus::skipped;
            outcome.detail = "aborted";
        } else if (prompt == nullptr) {
            RegionResolution r = resolve_region(*regions[i], model, options);
            if (r.abstained()) {
                outcome.detail = r.abstain_reason;
            } else {
                outcome.status = RegionStatus::resolved;
                outcome.applied = std::move(r.candidates.front());
            }
        } else {
            RegionResolution r = resolve_region(*regions[i], model, {options.k, 0.0});
            show_region(prompt->out, i, *regions[i]);
            if (r.abstained()) {
                prompt->out << "  no candidates: " << r.abstain_reason << "\n";
                outcome.detail = r.abstain_reason;
            } else {
                show_candidates(prompt->out, r.candidates);
                bool abort = false;
                const auto choice = ask(*prompt, r.candidates.size(), abort);
                result.report.aborted = abort;
                if (choice) {
                    outcome.status = RegionStatus::resolved;
                    outcome.applied = std::move(r.candidates[*choice]);
                } else {
                    outcome.status = RegionStatus::skipped;
                    outcome.detail = abort ? "aborted" : "skipped";
                }
            }
        }
        if (outcome.status == RegionStatus::resolved) {
            result.text.append(text.substr(copied, span.begin - copied));
            const bool unterminated_tail = span.end == text.size() && !parsed.document.final_newline;
            const Lines& lines = outcome.applied->text;
            for (std::size_t k = 0; k < lines.size(); ++k) {
                result.text += lines[k];
                if (k + 1 < lines.size() || !unterminated_tail) result.text += terminator;
            }
            copied = span.end;
        }
        result.report.regions.push_back(std::move(outcome));
    }
    result.text.append(text.substr(copied));
    return result;
}

}  // namespace mergesynth
