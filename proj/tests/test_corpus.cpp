#include "mergesynth/corpus.hpp"
#include "mergesynth/errors.hpp"
#include "mergesynth/process.hpp"

#include "synthetic.hpp"

#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <sstream>

using namespace mergesynth;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        std::string tmpl = (fs::temp_directory_path() / "mstest-XXXXXX").string();
        path = ::mkdtemp(tmpl.data());
    }
    ~TempDir() { fs::remove_all(path); }
};

void sh(const fs::path& dir, const std::string& script) {
    const std::string full = "set -e; cd '" + dir.string() +
                             "'; export GIT_AUTHOR_NAME=t GIT_AUTHOR_EMAIL=t@t GIT_COMMITTER_NAME=t "
                             "GIT_COMMITTER_EMAIL=t@t GIT_CONFIG_NOSYSTEM=1 HOME='" +
                             dir.string() + "'; " + script;
    REQUIRE(run_process({"sh", "-c", full}).exit_code == 0);
}

const char* const k_conflicting_history =
    "git init -q -b main . ; "
    "printf 'function f() {\\nvar y = 42;\\nreturn y;\\n}\\n' > a.js; "
    "printf 'keep\\n' > other.txt; "
    "git add . ; git commit -q -m base; "
    "git checkout -q -b side; "
    "printf 'function f() {\\nvar z = 43;\\nvar y = 42;\\nreturn y;\\n}\\n' > a.js; "
    "git commit -q -am side; "
    "git checkout -q main; "
    "printf 'function f() {\\nvar x = 1;\\nvar y = 42;\\nreturn y;\\n}\\n' > a.js; "
    "printf 'changed\\n' > other.txt; "
    "git commit -q -am main; "
    "git merge -q side || true; "
    "printf 'function f() {\\nvar z = 43;\\nvar x = 1;\\nvar y = 42;\\nreturn y;\\n}\\n' > a.js; "
    "git add a.js; git commit -q -m merged";

std::vector<ConflictPair> tuple_pairs(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<ConflictPair> out;
    for (std::size_t i = 0; i < n; ++i) {
        const auto t = testing::structured_tuple(rng);
        auto join = [](const Lines& l) {
            std::string s;
            for (const auto& x : l) s += x + "\n";
            return s;
        };
        const std::string head = "// file " + std::to_string(i) + "\n";
        out.push_back({head + "<<<<<<< ours\n" + join(t.a) + "||||||| base\n" + join(t.o) + "=======\n" + join(t.b) +
                           ">>>>>>> theirs\nend();\n",
                       head + join(t.r) + "end();\n",
                       {"fixture", std::to_string(i), "f.js"}});
    }
    return out;
}

}  // namespace

TEST_CASE("mining a scripted merge yields its conflict") {
    TempDir dir;
    sh(dir.path, k_conflicting_history);
    const auto pairs = mine_repository(dir.path);
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].provenance.path == "a.js");
    CHECK(pairs[0].conflict_text ==
          "function f() {\n<<<<<<< ours\nvar x = 1;\n||||||| base\n=======\nvar z = 43;\n>>>>>>> theirs\n"
          "var y = 42;\nreturn y;\n}\n");
    CHECK(pairs[0].resolved_text == "function f() {\nvar z = 43;\nvar x = 1;\nvar y = 42;\nreturn y;\n}\n");
    const auto tuples = localize_merge_tuples(pairs[0].conflict_text, pairs[0].resolved_text);
    REQUIRE(tuples.size() == 1);
    CHECK(tuples[0].r == Lines{"var z = 43;", "var x = 1;"});
}

TEST_CASE("fast-forward history has nothing to mine") {
    TempDir dir;
    sh(dir.path,
       "git init -q -b main . ; echo a > f; git add f; git commit -q -m a; git checkout -q -b s; echo b > f; "
       "git commit -q -am b; git checkout -q main; git merge -q s");
    CHECK(mine_repository(dir.path).empty());
}

TEST_CASE("a directory that is not a repository is unreadable") {
    TempDir dir;
    CHECK_THROWS_AS(mine_repository(dir.path), RepositoryUnreadable);
}

TEST_CASE("size limits guard against minified files") {
    CHECK_FALSE(within_limits(std::string(10000, 'x'), MineLimits{}));
    CHECK(within_limits("short\nlines\n", MineLimits{}));
    CHECK_FALSE(within_limits(std::string(100, 'x'), MineLimits{1000, 50}));
}

TEST_CASE("record ids hash the tuple content") {
    const auto t = testing::swap_tuple();
    const auto id = record_id(t);
    CHECK(id.size() == 64);
    MergeTuple other = t;
    other.provenance.repository = "elsewhere";
    other.context_prefix = {"ignored"};
    CHECK(record_id(other) == id);
    other.r.push_back("console.log(y)");
    CHECK(record_id(other) != id);
}

TEST_CASE("ten tuples split eight, one, one") {
    SplitManifest manifest;
    manifest.seed = 17;
    BuildReport report;
    auto records = build_records(tuple_pairs(10, 1), manifest, report);
    REQUIRE(records.size() == 10);
    CHECK(manifest.counts == std::array<std::size_t, 3>{8, 1, 1});

    std::vector<ConflictPair> reversed = tuple_pairs(10, 1);
    std::reverse(reversed.begin(), reversed.end());
    SplitManifest again = manifest;
    auto shuffled = build_records(reversed, again, report);
    for (const auto& r : records) {
        const auto it = std::find_if(shuffled.begin(), shuffled.end(), [&](const auto& s) { return s.id == r.id; });
        REQUIRE(it != shuffled.end());
        CHECK(it->split == r.split);
    }
}

TEST_CASE("duplicates collapse and output is deterministic") {
    auto pairs = tuple_pairs(6, 2);
    auto dup = pairs[0];
    dup.provenance.repository = "mirror";
    pairs.push_back(dup);
    SplitManifest manifest;
    std::ostringstream first, second;
    const auto report = build_dataset(pairs, manifest, first);
    build_dataset(pairs, manifest, second);
    CHECK(report.duplicates == 1);
    CHECK(report.localize.kept == 7);
    CHECK(first.str() == second.str());
    std::istringstream in(first.str());
    const auto loaded = load_dataset(in);
    CHECK(loaded.size() == 6);
    CHECK(report.to_text().find("[0,5]") != std::string::npos);
}

TEST_CASE("loading re-validates records") {
    std::ostringstream out;
    build_dataset(tuple_pairs(3, 4), SplitManifest{}, out);
    const std::string good = out.str();
    {
        std::istringstream in(good);
        CHECK(load_dataset(in).size() == 3);
    }
    std::string tampered = good;
    tampered.replace(tampered.find("\"r\":[\"") + 6, 0, "X");
    std::istringstream bad_id(tampered);
    CHECK_THROWS_AS(load_dataset(bad_id), DataError);

    CorpusRecord trivial;
    trivial.tuple.a = {"a"};
    trivial.tuple.b = {"b"};
    trivial.tuple.r = {"a"};
    trivial.id = record_id(trivial.tuple);
    std::istringstream filtered(record_to_json_line(trivial) + "\n");
    CHECK_THROWS_AS(load_dataset(filtered), DataError);

    std::istringstream garbage("{not json\n");
    CHECK_THROWS_AS(load_dataset(garbage), DataError);
}

TEST_CASE("records survive a write and load") {
    SplitManifest manifest;
    BuildReport report;
    const auto records = build_records(tuple_pairs(8, 9), manifest, report);
    std::ostringstream out;
    write_dataset(out, records);
    std::istringstream in(out.str());
    CHECK(load_dataset(in) == records);
    const auto buckets = corpus_size_buckets(records);
    std::size_t total = 0;
    for (auto b : buckets) total += b;
    CHECK(total == records.size());
}
