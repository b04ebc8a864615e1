#include "mergesynth/resolver.hpp"
#include "mergesynth/trainer.hpp"

#include "synthetic.hpp"

#include <doctest.h>

#include <algorithm>
#include <sstream>

using namespace mergesynth;

namespace {

std::string join(const Lines& lines, const std::string& eol = "\n") {
    std::string s;
    for (const auto& l : lines) s += l + eol;
    return s;
}

std::string region_text(const MergeTuple& t, const std::string& eol = "\n") {
    return "<<<<<<< a" + eol + join(t.a, eol) + "||||||| base" + eol + join(t.o, eol) + "=======" + eol +
           join(t.b, eol) + ">>>>>>> b" + eol;
}

std::vector<MergeTuple> training_tuples() {
    Rng rng(21);
    std::vector<MergeTuple> out = {testing::swap_tuple()};
    for (int i = 0; i < 7; ++i) out.push_back(testing::structured_tuple(rng));
    return out;
}

const Model& fitted() {
    static const Model model = [] {
        Model m;
        ModelConfig c;
        c.dim = 16;
        c.hidden = 16;
        c.l_max = 5;
        c.max_output = 6;
        c.seed = 4;
        m.params = ModelParams::initialize(c);
        std::vector<Sample> samples;
        for (const auto& t : training_tuples()) samples.push_back(prepare_sample(t, m.vocab, c));
        TrainConfig tc;
        tc.epochs = 300;
        tc.batch_size = 4;
        tc.adam.lr = 0.01;
        tc.stop_when_perfect = true;
        m.params = train_model(m.params, samples, samples, tc).best;
        return m;
    }();
    return model;
}

ConflictRegion region_of(const MergeTuple& t) { return {t.a, t.o, t.b, "a", "base", "b"}; }

bool from_inputs(const Lines& text, const ConflictRegion& r) {
    return std::all_of(text.begin(), text.end(), [&](const std::string& l) {
        return std::find(r.a_lines.begin(), r.a_lines.end(), l) != r.a_lines.end() ||
               std::find(r.b_lines.begin(), r.b_lines.end(), l) != r.b_lines.end();
    });
}

}  // namespace

TEST_CASE("the fitted model resolves the running example") {
    const auto t = testing::swap_tuple();
    const auto r = resolve_region(region_of(t), fitted(), {3, 0.5});
    REQUIRE_FALSE(r.abstained());
    const std::vector<LineRef> refs = {LineRef::of_b(1), LineRef::of_a(3), LineRef::stop()};
    CHECK(r.candidates[0].refs == refs);
    CHECK(r.candidates[0].text == t.r);
}

TEST_CASE("candidates are capped, ordered, distinct and copied from the inputs") {
    Rng rng(3);
    for (int i = 0; i < 20; ++i) {
        const auto region = region_of(testing::random_copy_tuple(rng, 3, 3));
        for (std::size_t k : {1u, 2u, 5u}) {
            const auto r = resolve_region(region, fitted(), {k, 0.0});
            CHECK(r.candidates.size() <= k);
            CHECK_FALSE(r.candidates.empty());
            for (std::size_t c = 0; c < r.candidates.size(); ++c) {
                const auto& cand = r.candidates[c];
                CHECK(from_inputs(cand.text, region));
                CHECK(cand.text == materialize(cand.refs, region.a_lines, region.b_lines));
                CHECK(cand.confidence > 0.0);
                CHECK(cand.confidence <= 1.0);
                if (c > 0) CHECK(cand.confidence <= r.candidates[c - 1].confidence);
                for (std::size_t d = 0; d < c; ++d) CHECK(r.candidates[d].text != cand.text);
            }
        }
    }
}

TEST_CASE("thresholds only remove candidates") {
    Rng rng(4);
    const Model untrained{Vocabulary{}, ModelParams::initialize(fitted().params.config), {}};
    for (int i = 0; i < 10; ++i) {
        const auto region = region_of(testing::random_copy_tuple(rng));
        CHECK(resolve_region(region, untrained, {3, 1.0}).abstained());
        std::size_t previous = 4;
        for (double t = 0.0; t <= 1.0; t += 0.1) {
            const auto r = resolve_region(region, fitted(), {3, t});
            CHECK(r.candidates.size() <= previous);
            previous = r.candidates.size();
            for (const auto& c : r.candidates) CHECK(c.confidence >= t);
            if (r.abstained()) CHECK_FALSE(r.abstain_reason.empty());
        }
    }
}

TEST_CASE("oversized regions abstain") {
    MergeTuple t;
    for (int i = 0; i < 6; ++i) t.a.push_back("a" + std::to_string(i) + "();");
    t.b = {"b();"};
    const auto r = resolve_region(region_of(t), fitted(), {3, 0.0});
    CHECK(r.abstained());
    CHECK(r.abstain_reason.find("too large") != std::string::npos);
}

TEST_CASE("a file with one resolvable and one oversized region") {
    const auto swap = testing::swap_tuple();
    MergeTuple big;
    for (int i = 0; i < 6; ++i) big.a.push_back("a" + std::to_string(i) + "();");
    big.b = {"b();"};
    const std::string head = "function main() {\n";
    const std::string middle = "  // between\n";
    const std::string tail = "}";
    const std::string text = head + region_text(swap) + middle + region_text(big) + tail;
    const auto out = resolve_file(text, fitted(), {3, 0.5});
    CHECK(out.text == head + join(swap.r) + middle + region_text(big) + tail);
    REQUIRE(out.report.regions.size() == 2);
    CHECK(out.report.regions[0].status == RegionStatus::resolved);
    CHECK(out.report.regions[1].status == RegionStatus::abstained);
    CHECK(out.report.exit_code() == 1);
    CHECK(out.report.to_text().find("1 of 2 regions resolved") != std::string::npos);
}

TEST_CASE("line endings and an unterminated last region are preserved") {
    const auto swap = testing::swap_tuple();
    const std::string crlf = "x\r\n" + region_text(swap, "\r\n") + "y\r\n";
    CHECK(resolve_file(crlf, fitted(), {3, 0.5}).text == "x\r\n" + join(swap.r, "\r\n") + "y\r\n");
    std::string open = "x\n" + region_text(swap);
    open.pop_back();
    CHECK(resolve_file(open, fitted(), {3, 0.5}).text == "x\nvar y = floor(x + 5.7)\nconsole.log(y)");
}

TEST_CASE("files without markers pass through") {
    for (const std::string text : {"", "a\nb\n", "no newline", "\r\n\r\n"}) {
        const auto out = resolve_file(text, fitted(), {});
        CHECK(out.text == text);
        CHECK(out.report.regions.empty());
        CHECK(out.report.exit_code() == 0);
    }
}

TEST_CASE("nothing resolved exits with two") {
    const auto swap = testing::swap_tuple();
    const auto out = resolve_file(region_text(swap), fitted(), {3, 1.01});
    CHECK(out.text == region_text(swap));
    CHECK(out.report.exit_code() == 2);
}

TEST_CASE("interactive choices") {
    const auto swap = testing::swap_tuple();
    Rng rng(8);
    const auto other = testing::random_copy_tuple(rng);
    const std::string text = region_text(swap) + "mid\n" + region_text(other);
    const auto options = ResolveOptions{3, 0.99};
    const auto all = resolve_region(region_of(swap), fitted(), {3, 0.0});
    REQUIRE(all.candidates.size() >= 2);

    {
        std::istringstream in("zzz\n2\ns\n");
        std::ostringstream out;
        Prompt prompt{in, out};
        const auto r = resolve_file(text, fitted(), options, &prompt);
        CHECK(r.text == join(all.candidates[1].text) + "mid\n" + region_text(other));
        CHECK(r.report.regions[1].status == RegionStatus::skipped);
        CHECK(r.report.exit_code() == 1);
        CHECK(out.str().find("[2] confidence") != std::string::npos);
    }
    {
        std::istringstream in("q\n");
        std::ostringstream out;
        Prompt prompt{in, out};
        const auto r = resolve_file(text, fitted(), options, &prompt);
        CHECK(r.text == text);
        CHECK(r.report.aborted);
        CHECK(r.report.regions.size() == 2);
        CHECK(r.report.regions[1].status == RegionStatus::skipped);
        CHECK(r.report.exit_code() == 2);
    }
    {
        std::istringstream in("1\n");
        std::ostringstream out;
        Prompt prompt{in, out};
        const auto r = resolve_file(text, fitted(), options, &prompt);
        CHECK(r.report.regions[0].status == RegionStatus::resolved);
        CHECK(r.report.aborted);
    }
}
