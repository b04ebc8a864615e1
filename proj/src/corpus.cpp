#include "mergesynth/corpus.hpp"

#include "mergesynth/errors.hpp"
#include "mergesynth/process.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <unordered_set>

namespace mergesynth {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

    std::string sha256_hex(std::string_view data) {
        unsigned char digest[EVP_MAX_MD_SIZE];
        unsigned int len = 0;
        if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
            throw Error("sha256 failed");
        }
        static constexpr char hex[] = "0123456789abcdef";
        std::string out;
        out.reserve(len * 2);
        for (unsigned int i = 0; i < len; ++i) {
            out.push_back(hex[digest[i] >> 4]);
            out.push_back(hex[digest[i] & 0xf]);
        }
        return out;
    }

    bool valid_utf8(std::string_view s) {
        std::size_t i = 0;
        while (i < s.size()) {
            auto c = static_cast<unsigned char>(s[i]);
            std::size_t extra = 0;
            if (c < 0x80) {
                extra = 0;
            } else if ((c >> 5) == 0x6) {
                extra = 1;
            } else if ((c >> 4) == 0xe) {
                extra = 2;
            } else if ((c >> 3) == 0x1e) {
                extra = 3;
            } else {
                return false;
            }
            if (i + extra >= s.size() && extra > 0) return false;
            for (std::size_t k = 1; k <= extra; ++k) {
                if ((static_cast<unsigned char>(s[i + k]) >> 6) != 0x2) return false;
            }
            i += extra + 1;
        }
        return true;
    }

    std::vector<std::string> split_nul(const std::string& s) {
        std::vector<std::string> out;
        std::size_t pos = 0;
        while (pos < s.size()) {
            auto end = s.find('\0', pos);
            if (end == std::string::npos) end = s.size();
            if (end > pos) out.emplace_back(s.substr(pos, end - pos));
            pos = end + 1;
        }
        return out;
    }

    std::string trim(std::string s) {
        while (!s.empty() && (s.back() == '\n' || s.back() == '\r' || s.back() == ' ')) s.pop_back();
        return s;
    }

    class Git {
    public:
        explicit Git(fs::path repo) : repo_(std::move(repo)) {}

        ProcessResult run(std::vector<std::string> args) const {
            std::vector<std::string> argv{"git", "-C", repo_.string()};
            argv.insert(argv.end(), std::make_move_iterator(args.begin()), std::make_move_iterator(args.end()));
            return run_process(argv);
        }

        std::optional<std::string> blob(const std::string& rev, const std::string& path) const {
            auto r = run({"cat-file", "blob", rev + ":" + path});
            if (r.exit_code != 0) return std::nullopt;
            return std::move(r.out);
        }

        std::set<std::string> changed(const std::string& from, const std::string& to) const {
            auto r = run({"diff", "--name-only", "--no-renames", "-z", from, to});
            if (r.exit_code != 0) throw Error("git diff failed for " + from + ".." + to);
            auto names = split_nul(r.out);
            return {names.begin(), names.end()};
        }

    private:
        fs::path repo_;
    };

    json lines_json(const Lines& lines) { return json(lines); }

    Lines lines_from(const json& j, const char* key) {
        if (!j.contains(key) || !j.at(key).is_array()) throw DataError(std::string("missing array field '") + key + "'");
        Lines out;
        for (const auto& v : j.at(key)) {
            if (!v.is_string()) throw DataError(std::string("non-string line in '") + key + "'");
            out.push_back(v.get<std::string>());
        }
        return out;
    }

}  // namespace

bool within_limits(std::string_view content, const MineLimits& limits) {
    if (content.size() > limits.max_file_bytes) return false;
    std::size_t run = 0;
    for (char c : content) {
        if (c == '\n') {
            run = 0;
        } else if (++run > limits.max_line_length) {
            return false;
        }
    }
    return true;
}

void mine_repository(const fs::path& repo, const MineLimits& limits, const PairSink& sink, const LogSink& log) {
    Git git(repo);
    auto head = git.run({"rev-parse", "--verify", "HEAD"});
    if (head.exit_code != 0) throw RepositoryUnreadable("not a readable git repository with history: " + repo.string());

    auto merges = git.run({"rev-list", "--merges", "--parents", "--reverse", "HEAD"});
    if (merges.exit_code != 0) throw RepositoryUnreadable("git rev-list failed in " + repo.string());

    auto note = [&](const std::string& msg) {
        if (log) log(msg);
    };

    std::istringstream lines(merges.out);
    std::string line;
    while (std::getline(lines, line)) {
        std::istringstream fields(line);
        std::vector<std::string> ids;
        for (std::string id; fields >> id;) ids.push_back(id);
        if (ids.size() != 3) {
            note("skip " + (ids.empty() ? std::string("?") : ids[0]) + ": not a two-parent merge");
            continue;
        }
        const auto& merge = ids[0];
        const auto& ours = ids[1];
        const auto& theirs = ids[2];
        auto base_r = git.run({"merge-base", ours, theirs});
        if (base_r.exit_code != 0) {
            note("skip " + merge + ": no merge base");
            continue;
        }
        auto base = trim(base_r.out);

        std::set<std::string> both;
        try {
            auto ca = git.changed(base, ours);
            auto cb = git.changed(base, theirs);
            std::set_intersection(ca.begin(), ca.end(), cb.begin(), cb.end(), std::inserter(both, both.end()));
        } catch (const Error& e) {
            note("skip " + merge + ": " + e.what());
            continue;
        }

        for (const auto& path : both) {
            try {
                auto a = git.blob(ours, path);
                auto o = git.blob(base, path);
                auto b = git.blob(theirs, path);
                auto m = git.blob(merge, path);
                if (!a || !o || !b || !m) continue;  // added or deleted on some side
                bool ok = true;
                for (const auto* content : {&*a, &*o, &*b, &*m}) {
                    if (!within_limits(*content, limits)) {
                        note("skip " + merge + ":" + path + ": exceeds size limits");
                        ok = false;
                        break;
                    }
                    if (content->find('\0') != std::string::npos || !valid_utf8(*content)) {
                        note("skip " + merge + ":" + path + ": binary or non-UTF-8 content");
                        ok = false;
                        break;
                    }
                }
                if (!ok) continue;
                auto merged = diff3_merge(TextDocument::from_text(*a), TextDocument::from_text(*o),
                                          TextDocument::from_text(*b), MergeLabels{"ours", "base", "theirs"});
                if (merged.is_clean()) continue;
                sink(ConflictPair{serialize(merged), std::move(*m), Provenance{repo.string(), merge, path}});
            } catch (const std::exception& e) {
                note("skip " + merge + ":" + path + ": " + e.what());
            }
        }
    }
}

std::vector<ConflictPair> mine_repository(const fs::path& repo, const MineLimits& limits) {
    std::vector<ConflictPair> out;
    mine_repository(repo, limits, [&](ConflictPair p) { out.push_back(std::move(p)); });
    return out;
}

std::string_view to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::valid: return "valid";
        case Split::test: return "test";
    }
    return "train";
}

Split split_from_string(std::string_view s) {
    if (s == "train") return Split::train;
    if (s == "valid") return Split::valid;
    if (s == "test") return Split::test;
    throw DataError("unknown split '" + std::string(s) + "'");
}

std::string record_id(const MergeTuple& t) {
    json canonical = json::array({lines_json(t.a), lines_json(t.b), lines_json(t.o), lines_json(t.r)});
    return sha256_hex(canonical.dump());
}

void assign_splits(std::vector<CorpusRecord>& records, SplitManifest& manifest) {
    double total = manifest.fractions[0] + manifest.fractions[1] + manifest.fractions[2];
    if (std::abs(total - 1.0) > 1e-9 || *std::min_element(manifest.fractions.begin(), manifest.fractions.end()) < 0) {
        throw Error("split fractions must be non-negative and sum to 1");
    }
    const std::size_t n = records.size();
    std::vector<std::pair<std::string, std::size_t>> keyed;
    keyed.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        keyed.emplace_back(sha256_hex(std::to_string(manifest.seed) + ":" + records[i].id), i);
    }
    std::sort(keyed.begin(), keyed.end());

    auto n_train = static_cast<std::size_t>(std::llround(manifest.fractions[0] * static_cast<double>(n)));
    auto n_valid = static_cast<std::size_t>(std::llround(manifest.fractions[1] * static_cast<double>(n)));
    n_train = std::min(n_train, n);
    n_valid = std::min(n_valid, n - n_train);
    manifest.counts = {n_train, n_valid, n - n_train - n_valid};
    for (std::size_t rank = 0; rank < n; ++rank) {
        auto& r = records[keyed[rank].second];
        r.split = rank < n_train ? Split::train : rank < n_train + n_valid ? Split::valid : Split::test;
    }
}

std::array<std::size_t, 5> corpus_size_buckets(const std::vector<CorpusRecord>& records) {
    std::array<std::size_t, 5> out{};
    for (const auto& r : records) {
        auto size = r.tuple.a.size() + r.tuple.b.size();
        std::size_t k = 0;
        while (k < k_corpus_bucket_bounds.size() && size > k_corpus_bucket_bounds[k]) ++k;
        ++out[k];
    }
    return out;
}

std::string format_size_buckets(const std::array<std::size_t, 5>& buckets) {
    static constexpr const char* names[] = {"[0,5]", "[6,10]", "[11,50]", "[51,100]", "100+"};
    std::size_t total = 0;
    for (auto c : buckets) total += c;
    std::ostringstream os;
    os << std::left << std::setw(10) << "lines" << std::right << std::setw(8) << "count" << std::setw(10) << "percent"
       << "\n";
    for (std::size_t k = 0; k < buckets.size(); ++k) {
        double pct = total == 0 ? 0.0 : 100.0 * static_cast<double>(buckets[k]) / static_cast<double>(total);
        os << std::left << std::setw(10) << names[k] << std::right << std::setw(8) << buckets[k] << std::setw(9)
           << std::fixed << std::setprecision(2) << pct << "%\n";
    }
    os << std::left << std::setw(10) << "total" << std::right << std::setw(8) << total << "\n";
    return os.str();
}

std::string BuildReport::to_text() const {
    std::ostringstream os;
    os << "pairs:          " << pairs << "\n"
       << "parse failures: " << parse_failures << "\n"
       << "regions:        " << localize.regions << "\n"
       << "ambiguous:      " << localize.ambiguous << "\n"
       << "trivial:        " << localize.trivial << "\n"
       << "new code:       " << localize.new_code << "\n"
       << "localized:      " << localize.kept << "\n"
       << "duplicates:     " << duplicates << "\n"
       << "split sizes:    train=" << manifest.counts[0] << " valid=" << manifest.counts[1]
       << " test=" << manifest.counts[2] << " (seed " << manifest.seed << ")\n\n"
       << format_size_buckets(size_buckets);
    return os.str();
}

std::vector<CorpusRecord> build_records(const std::vector<ConflictPair>& pairs, SplitManifest& manifest,
                                        BuildReport& report) {
    std::vector<CorpusRecord> records;
    std::unordered_set<std::string> seen;
    for (const auto& pair : pairs) {
        ++report.pairs;
        std::vector<MergeTuple> tuples;
        try {
            tuples = localize_merge_tuples(pair.conflict_text, pair.resolved_text, pair.provenance,
                                           k_default_context_lines, report.localize);
        } catch (const MalformedMarkers&) {
            ++report.parse_failures;
            continue;
        }
        for (auto& t : tuples) {
            auto id = record_id(t);
            if (!seen.insert(id).second) {
                ++report.duplicates;
                continue;
            }
            records.push_back(CorpusRecord{std::move(id), std::move(t), Split::train});
        }
    }
    assign_splits(records, manifest);
    report.manifest = manifest;
    report.size_buckets = corpus_size_buckets(records);
    return records;
}

BuildReport build_dataset(const std::vector<ConflictPair>& pairs, const SplitManifest& manifest, std::ostream& out) {
    BuildReport report;
    SplitManifest m = manifest;
    auto records = build_records(pairs, m, report);
    write_dataset(out, records);
    return report;
}

std::string record_to_json_line(const CorpusRecord& record) {
    const auto& t = record.tuple;
    json j;
    j["id"] = record.id;
    j["a"] = lines_json(t.a);
    j["b"] = lines_json(t.b);
    j["o"] = lines_json(t.o);
    j["r"] = lines_json(t.r);
    j["context_prefix"] = lines_json(t.context_prefix);
    j["context_suffix"] = lines_json(t.context_suffix);
    j["provenance"] = {{"repository", t.provenance.repository},
                       {"commit", t.provenance.commit},
                       {"path", t.provenance.path}};
    j["split"] = std::string(to_string(record.split));
    return j.dump();
}

void write_dataset(std::ostream& out, const std::vector<CorpusRecord>& records) {
    for (const auto& r : records) out << record_to_json_line(r) << '\n';
}

std::vector<CorpusRecord> load_dataset(std::istream& in) {
    std::vector<CorpusRecord> out;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fail = [&](const std::string& what) { throw DataError("dataset line " + std::to_string(line_no) + ": " + what); };
        try {
            auto j = json::parse(line);
            CorpusRecord r;
            r.id = j.at("id").get<std::string>();
            r.tuple.a = lines_from(j, "a");
            r.tuple.b = lines_from(j, "b");
            r.tuple.o = lines_from(j, "o");
            r.tuple.r = lines_from(j, "r");
            r.tuple.context_prefix = lines_from(j, "context_prefix");
            r.tuple.context_suffix = lines_from(j, "context_suffix");
            const auto& p = j.at("provenance");
            r.tuple.provenance = {p.at("repository").get<std::string>(), p.at("commit").get<std::string>(),
                                  p.at("path").get<std::string>()};
            r.split = split_from_string(j.at("split").get<std::string>());
            if (record_id(r.tuple) != r.id) fail("id does not match content");
            if (!seen.insert(r.id).second) fail("duplicate record id");
            if (classify_tuple(r.tuple.a, r.tuple.b, r.tuple.o, r.tuple.r) != TupleVerdict::kept) {
                fail("record fails the trivial / new-code filters");
            }
            out.push_back(std::move(r));
        } catch (const json::exception& e) {
            fail(e.what());
        }
    }
    return out;
}

std::vector<CorpusRecord> load_dataset(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset " + path.string());
    return load_dataset(in);
}

}  // namespace mergesynth
