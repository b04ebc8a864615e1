#include "mergesynth/localize.hpp"
#include "mergesynth/rng.hpp"

#include "oracles.hpp"
#include "synthetic.hpp"

#include <doctest.h>

using namespace mergesynth;

namespace {

const char* const k_replica_conflict =
    "function show() {\n"
    "var time = new Date();\n"
    "print_time(time);\n"
    "<<<<<<< a.js\n"
    "x = foo();\n"
    "||||||| base.js\n"
    "=======\n"
    "x = bar();\n"
    ">>>>>>> b.js\n"
    "print_time(time);\n"
    "}\n";

const char* const k_replica_resolved =
    "function show() {\n"
    "let time = new Date();\n"
    "print_time(time);\n"
    "baz();\n"
    "print_time(time);\n"
    "}\n";

std::string join(const Lines& lines) {
    std::string s;
    for (const auto& l : lines) s += l + "\n";
    return s;
}

std::string conflict_text(const Lines& prefix, const MergeTuple& t, const Lines& suffix) {
    return join(prefix) + "<<<<<<< a.js\n" + join(t.a) + "||||||| base.js\n" + join(t.o) + "=======\n" + join(t.b) +
           ">>>>>>> b.js\n" + join(suffix);
}

}  // namespace

TEST_CASE("minimal unique prefix examples") {
    CHECK(minimal_unique_prefix("abc", "acdabacc") == 3);
    CHECK(minimal_unique_prefix("z", "abc") == -1);
    CHECK(minimal_unique_prefix("a", "bca") == 2);
    CHECK(minimal_unique_prefix("", "abc") == -1);
    CHECK(minimal_unique_prefix("aa", "aaa") == -1);
}

TEST_CASE("minimal unique prefix agrees with occurrence counting") {
    Rng rng(3);
    for (int i = 0; i < 500; ++i) {
        std::string x(rng.below(6), 'a'), y(rng.below(12), 'a');
        for (auto& c : x) c = static_cast<char>('a' + rng.below(3));
        for (auto& c : y) c = static_cast<char>('a' + rng.below(3));
        CHECK(minimal_unique_prefix(x, y) == testing::brute_minimal_unique_prefix(x, y));
    }
}

TEST_CASE("new resolution text is localized between unchanged bookends") {
    const auto r = localize_res_region(k_replica_conflict, k_replica_resolved, 0);
    REQUIRE(r.has_value());
    CHECK(*r == Lines{"baz();"});
    CHECK(localize_merge_tuples(k_replica_conflict, k_replica_resolved).empty());
    LocalizeStats stats;
    localize_merge_tuples(k_replica_conflict, k_replica_resolved, {}, 5, stats);
    CHECK(stats.regions == 1);
    CHECK(stats.new_code == 1);
}

TEST_CASE("the running example yields one tuple") {
    const auto t = testing::swap_tuple();
    const Lines prefix{"function area(x) {"}, suffix{"}"};
    const std::string c = conflict_text(prefix, t, suffix);
    const std::string m = join(prefix) + join(t.r) + join(suffix);
    const auto tuples = localize_merge_tuples(c, m, {"repo", "abc", "f.js"});
    REQUIRE(tuples.size() == 1);
    CHECK(tuples[0].a == t.a);
    CHECK(tuples[0].o == t.o);
    CHECK(tuples[0].b == t.b);
    CHECK(tuples[0].r == t.r);
    CHECK(tuples[0].context_prefix == prefix);
    CHECK(tuples[0].context_suffix == suffix);
    CHECK(tuples[0].provenance.path == "f.js");
}

TEST_CASE("trivial resolutions are filtered") {
    const auto t = testing::swap_tuple();
    const std::string c = conflict_text({"head"}, t, {"tail"});
    for (const Lines* side : {&t.a, &t.b, &t.o}) {
        const std::string m = "head\n" + join(*side) + "tail\n";
        const auto r = localize_res_region(c, m, 0);
        REQUIRE(r.has_value());
        CHECK(*r == *side);
        CHECK(localize_merge_tuples(c, m).empty());
    }
    CHECK(classify_tuple({"a"}, {"b"}, {}, {"a"}) == TupleVerdict::trivial);
    CHECK(classify_tuple({"a"}, {"b"}, {}, {"c"}) == TupleVerdict::new_code);
    CHECK(classify_tuple({"a"}, {"b"}, {}, {"b", "a"}) == TupleVerdict::kept);
}

TEST_CASE("a suffix found twice without disambiguation gives nil") {
    const std::string c = "<<<<<<< a\nx\n||||||| o\n=======\ny\n>>>>>>> b\nend\nmore\n";
    const std::string m = "x\nend\nX\nend\nY\n";
    // "end\n" occurs twice in the resolved file and no longer suffix prefix occurs at all
    CHECK(testing::brute_minimal_unique_prefix("end\nmore\n", m) == -1);
    CHECK_FALSE(localize_res_region(c, m, 0).has_value());
}

TEST_CASE("bookends off a line boundary give nil") {
    const std::string c = "ab\n<<<<<<< a\nx\n||||||| o\n=======\ny\n>>>>>>> b\ncd\n";
    CHECK_FALSE(localize_res_region(c, "abQ\ncd\n", 0).has_value());
    const auto ok = localize_res_region(c, "ab\nQ\ncd\n", 0);
    REQUIRE(ok.has_value());
    CHECK(*ok == Lines{"Q"});
}

TEST_CASE("an empty resolution localizes to no lines") {
    const std::string c = "ab\n<<<<<<< a\nx\n||||||| o\n=======\ny\n>>>>>>> b\ncd\n";
    const auto r = localize_res_region(c, "ab\ncd\n", 0);
    REQUIRE(r.has_value());
    CHECK(r->empty());
}

TEST_CASE("every region of a two-region file is localized") {
    Rng rng(5);
    const auto t1 = testing::structured_tuple(rng);
    const auto t2 = testing::structured_tuple(rng);
    const std::string c = conflict_text({"start();"}, t1, {"middle();"}) + conflict_text({}, t2, {"finish();"});
    const std::string m = "start();\n" + join(t1.r) + "middle();\n" + join(t2.r) + "finish();\n";
    const auto tuples = localize_merge_tuples(c, m);
    REQUIRE(tuples.size() == 2);
    CHECK(tuples[0].r == t1.r);
    CHECK(tuples[1].r == t2.r);
    CHECK(tuples[1].conflict_index == 1);
    CHECK(localize_merge_tuples(c, m) == tuples);
}
