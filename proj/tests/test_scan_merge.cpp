#include "mergesynth/scan_merge.hpp"

#include "synthetic.hpp"

#include <doctest.h>

#include <algorithm>
#include <set>

using namespace mergesynth;

namespace {

bool always(const Lines&) { return true; }

// Sides taken in order, as a string like "ABBA".
std::string pattern(const ScanCandidate& c) {
    std::string s;
    for (const auto& r : c.refs) s += r.side == LineRef::Side::a ? 'A' : 'B';
    return s;
}

}  // namespace

TEST_CASE("both interleavings of two single lines appear") {
    const auto c = scan_merge(Lines{"a1"}, Lines{"b1"}, 100, 1, always, 5);
    REQUIRE(c.size() == 2);
    std::set<Lines> texts;
    for (const auto& x : c) texts.insert(x.text);
    CHECK(texts == std::set<Lines>{{"a1", "b1"}, {"b1", "a1"}});
    CHECK(c[0].confidence + c[1].confidence == doctest::Approx(1.0));
}

TEST_CASE("two by two has six interleavings") {
    const auto c = scan_merge(Lines{"a1", "a2"}, Lines{"b1", "b2"}, 400, 2, always, 10);
    std::set<std::string> seen;
    for (const auto& x : c) seen.insert(pattern(x));
    CHECK(seen == std::set<std::string>{"AABB", "ABAB", "ABBA", "BAAB", "BABA", "BBAA"});
    double total = 0;
    for (const auto& x : c) total += x.confidence;
    CHECK(total == doctest::Approx(1.0));
    // uniform sampling: every pattern near 1/6 of 400 draws
    for (const auto& x : c) CHECK(x.confidence == doctest::Approx(1.0 / 6).epsilon(0.4));
}

TEST_CASE("candidates keep every line in side order") {
    Rng rng(3);
    for (int i = 0; i < 50; ++i) {
        const auto t = testing::random_copy_tuple(rng, 4);
        for (const auto& c : scan_merge(t.a, t.b, 20, static_cast<std::uint64_t>(i), always, 3)) {
            REQUIRE(c.text.size() == t.a.size() + t.b.size());
            Lines from_a, from_b;
            std::size_t last_a = 0, last_b = 0;
            for (std::size_t k = 0; k < c.refs.size(); ++k) {
                const auto& r = c.refs[k];
                if (r.side == LineRef::Side::a) {
                    CHECK(r.line == ++last_a);
                    from_a.push_back(c.text[k]);
                } else {
                    CHECK(r.line == ++last_b);
                    from_b.push_back(c.text[k]);
                }
            }
            CHECK(from_a == t.a);
            CHECK(from_b == t.b);
        }
    }
}

TEST_CASE("rejecting everything leaves nothing") {
    CHECK(scan_merge(Lines{"a"}, Lines{"b"}, 50, 1, [](const Lines&) { return false; }, 3).empty());
}

TEST_CASE("k caps the candidates in first-sampled order") {
    const auto all = scan_merge(Lines{"a1", "a2"}, Lines{"b1", "b2"}, 200, 9, always, 10);
    const auto two = scan_merge(Lines{"a1", "a2"}, Lines{"b1", "b2"}, 200, 9, always, 2);
    REQUIRE(two.size() == 2);
    CHECK(two[0].text == all[0].text);
    CHECK(two[1].text == all[1].text);
}

TEST_CASE("seeded runs repeat") {
    const Lines a = {"x(", "y"}, b = {")", "z"};
    const auto first = scan_merge(a, b, 30, 5, brackets_balanced, 3);
    const auto second = scan_merge(a, b, 30, 5, brackets_balanced, 3);
    REQUIRE(first.size() == second.size());
    for (std::size_t k = 0; k < first.size(); ++k) {
        CHECK(first[k].text == second[k].text);
        CHECK(first[k].confidence == second[k].confidence);
        CHECK(brackets_balanced(first[k].text));
    }
}

TEST_CASE("lines shared by both sides appear twice but the text once") {
    const auto c = scan_merge(Lines{"s"}, Lines{"s"}, 50, 1, always, 5);
    REQUIRE(c.size() == 1);
    CHECK(c[0].text == Lines{"s", "s"});
    CHECK(c[0].confidence == 1.0);
}

TEST_CASE("bracket balance") {
    CHECK(brackets_balanced({"f(a[1], {b: 2});"}));
    CHECK(brackets_balanced({"if (x) {", "  y();", "}"}));
    CHECK_FALSE(brackets_balanced({"f(a[1)];"}));
    CHECK_FALSE(brackets_balanced({"}", "{"}));
    CHECK_FALSE(brackets_balanced({"f("}));
    CHECK(brackets_balanced({"s = \")(\";", "t = ')';", "u = `{`;"}));
    CHECK(brackets_balanced({"x(); // )", "/* ( */ y();"}));
    CHECK(brackets_balanced({"/* (", "  ( */"}));
    CHECK(brackets_balanced({"s = \"\\\")\";"}));
    CHECK(brackets_balanced({}));
}

TEST_CASE("external predicates use the exit status") {
    const auto yes = external_predicate({"true"});
    const auto no = external_predicate({"false"});
    CHECK(yes({"a"}));
    CHECK_FALSE(no({"a"}));
    const auto grep = external_predicate({"grep", "-q", "^b1$"});
    const auto c = scan_merge(Lines{"a1"}, Lines{"b1"}, 20, 1, grep, 3);
    CHECK(c.size() == 2);
    CHECK(scan_merge(Lines{"a1"}, Lines{"a2"}, 20, 1, grep, 3).empty());
    CHECK_THROWS_AS(external_predicate({}), std::invalid_argument);
}
