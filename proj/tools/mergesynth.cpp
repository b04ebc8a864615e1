#include "mergesynth/beam.hpp"
#include "mergesynth/checkpoint.hpp"
#include "mergesynth/corpus.hpp"
#include "mergesynth/errors.hpp"
#include "mergesynth/evaluation.hpp"
#include "mergesynth/resolver.hpp"
#include "mergesynth/scan_merge.hpp"
#include "mergesynth/trainer.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

using namespace mergesynth;

namespace {

constexpr int k_exit_usage = 64;
constexpr int k_exit_data = 65;

struct UsageError : Error {
    using Error::Error;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << bytes;
    if (!out) throw Error("cannot write " + path);
}

std::size_t default_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

std::vector<MergeTuple> tuples_of(const std::vector<CorpusRecord>& records, Split split) {
    std::vector<MergeTuple> out;
    for (const auto& r : records) {
        if (r.split == split) out.push_back(r.tuple);
    }
    return out;
}

ValidityPredicate predicate_for(const std::string& validator) {
    if (validator.empty()) return brackets_balanced;
    return external_predicate({"sh", "-c", validator});
}

struct ExtractArgs {
    std::string repo;
    std::string out;
    std::uint64_t seed = 0;
    std::vector<double> splits{0.8, 0.1, 0.1};
    std::size_t max_line = 1000;
    std::size_t max_bytes = 1 << 20;
};

int run_extract(const ExtractArgs& args) {
    if (args.splits.size() != 3) throw UsageError("--splits takes three fractions");
    const double sum = args.splits[0] + args.splits[1] + args.splits[2];
    if (std::abs(sum - 1.0) > 1e-9 || args.splits[0] < 0 || args.splits[1] < 0 || args.splits[2] < 0) {
        throw UsageError("--splits must be non-negative and sum to 1");
    }
    MineLimits limits{args.max_line, args.max_bytes};
    std::vector<ConflictPair> pairs;
    mine_repository(
        args.repo, limits, [&](ConflictPair p) { pairs.push_back(std::move(p)); },
        [](const std::string& msg) { std::cerr << "extract: " << msg << "\n"; });
    SplitManifest manifest;
    manifest.fractions = {args.splits[0], args.splits[1], args.splits[2]};
    manifest.seed = args.seed;
    std::ofstream out(args.out, std::ios::binary);
    if (!out) throw Error("cannot write " + args.out);
    const BuildReport report = build_dataset(pairs, manifest, out);
    std::cerr << report.to_text();
    return 0;
}

struct TrainArgs {
    std::string data;
    std::string mode = "aligned_linearized";
    std::size_t dim = 64;
    std::size_t hidden = 64;
    std::size_t epochs = 20;
    std::uint64_t seed = 1;
    std::string out;
    std::size_t l_max = 30;
    std::size_t max_output = 30;
    std::size_t vocab_size = k_default_vocab_size;
    std::size_t batch = 16;
    double lr = 1e-3;
    double clip = 5.0;
    std::size_t beam = 1;
    std::size_t threads = 1;
    std::string log;
};

int run_train(const TrainArgs& args) {
    const auto records = load_dataset(std::filesystem::path(args.data));
    const auto train_tuples = tuples_of(records, Split::train);
    const auto valid_tuples = tuples_of(records, Split::valid);
    if (train_tuples.empty()) throw EmptyCorpus("dataset has no training records");

    std::vector<Lines> texts;
    for (const auto& t : train_tuples) {
        for (const Lines* l : {&t.a, &t.b, &t.o, &t.r}) texts.push_back(*l);
    }
    Model model;
    model.vocab = train_bpe(texts, args.vocab_size);

    ModelConfig config;
    config.mode = representation_from_string(args.mode);
    config.dim = args.dim;
    config.hidden = args.hidden;
    config.l_max = args.l_max;
    config.max_output = args.max_output;
    config.vocab_size = model.vocab.size();
    config.seed = args.seed;

    std::vector<Sample> train, valid;
    for (const auto& t : train_tuples) train.push_back(prepare_sample(t, model.vocab, config));
    for (const auto& t : valid_tuples) valid.push_back(prepare_sample(t, model.vocab, config));

    TrainConfig tc;
    tc.epochs = args.epochs;
    tc.batch_size = args.batch;
    tc.adam.lr = args.lr;
    tc.clip_norm = args.clip;
    tc.seed = args.seed;
    tc.beam_width = args.beam;
    tc.threads = args.threads;

    std::ofstream log;
    if (!args.log.empty()) {
        log.open(args.log);
        if (!log) throw Error("cannot write " + args.log);
        log << epoch_csv_header() << "\n";
    }
    std::cerr << epoch_csv_header() << "\n";
    const TrainResult result =
        train_model(ModelParams::initialize(config), train, valid, tc, [&](const EpochLog& e) {
            std::cerr << to_csv_row(e) << "\n";
            if (log.is_open()) log << to_csv_row(e) << std::endl;
        });

    model.params = result.best;
    model.meta = {{"seed", args.seed},
                  {"epochs", args.epochs},
                  {"best_epoch", result.best_epoch},
                  {"best_valid_top1", result.best_top1},
                  {"train_records", train_tuples.size()},
                  {"valid_records", valid_tuples.size()}};
    save_checkpoint(model, args.out);
    std::cerr << "saved epoch " << result.best_epoch << " (valid top-1 " << result.best_top1 << ") to " << args.out
              << "\n";
    return 0;
}

struct ResolveArgs {
    std::string model;
    std::string file;
    std::string out;
    bool interactive = false;
    std::size_t k = 3;
    double threshold = 0.5;
};

int run_resolve(const ResolveArgs& args) {
    const std::string text = read_file(args.file);
    const Model model = load_checkpoint(args.model);
    Prompt prompt{std::cin, std::cerr};
    const FileResolution res =
        resolve_file(text, model, {args.k, args.threshold}, args.interactive ? &prompt : nullptr);
    if (args.out.empty()) {
        std::cout << res.text;
    } else {
        write_file(args.out, res.text);
    }
    std::cerr << res.report.to_text();
    return res.report.exit_code();
}

struct EvalArgs {
    std::string model;
    std::string data;
    std::string split = "test";
    std::string baseline;
    std::size_t k = 3;
    std::vector<double> thresholds = default_threshold_grid();
    std::size_t threads = default_threads();
    std::size_t trials = 100;
    std::size_t runs = 10;
    std::uint64_t seed = 1;
    std::string validator;
    std::string json;
    std::string csv;
};

int run_eval(const EvalArgs& args) {
    if (args.model.empty() && args.baseline.empty()) throw UsageError("eval needs --model or --baseline");
    if (!args.baseline.empty() && args.baseline != "scanmerge") {
        throw UsageError("unknown baseline '" + args.baseline + "'");
    }
    const auto records = load_dataset(std::filesystem::path(args.data));
    const auto tuples = tuples_of(records, split_from_string(args.split));
    std::vector<EvalReport> reports;
    Vocabulary vocab;
    if (!args.model.empty()) {
        const Model model = load_checkpoint(args.model);
        vocab = model.vocab;
        const auto results = model_results(tuples, model, args.k, args.threads);
        reports.push_back(build_report(std::string(to_string(model.params.config.mode)), results, args.thresholds));
    }
    if (!args.baseline.empty()) {
        ScanMergeOptions opts{args.trials, args.k, args.runs, args.seed};
        reports.push_back(scanmerge_report(tuples, vocab, predicate_for(args.validator), opts, args.thresholds));
    }
    nlohmann::json j = nlohmann::json::array();
    std::string csv;
    for (const auto& r : reports) {
        std::cout << r.to_text() << "\n";
        j.push_back(r.to_json());
        csv += r.sweep_csv();
    }
    if (!args.json.empty()) write_file(args.json, j.dump(2) + "\n");
    if (!args.csv.empty()) write_file(args.csv, csv);
    return 0;
}

struct ScanArgs {
    std::string file;
    std::size_t trials = 100;
    std::size_t k = 3;
    std::uint64_t seed = 1;
    std::string validator;
};

int run_scanmerge(const ScanArgs& args) {
    const ConflictDocument doc = parse_conflicts(read_file(args.file));
    const auto valid = predicate_for(args.validator);
    const auto regions = doc.conflicts();
    for (std::size_t i = 0; i < regions.size(); ++i) {
        const auto candidates = scan_merge(*regions[i], args.trials, args.seed + i, valid, args.k);
        std::cout << "region " << i + 1 << ": " << candidates.size() << " candidates\n";
        for (std::size_t c = 0; c < candidates.size(); ++c) {
            std::cout << "  [" << c + 1 << "] frequency " << candidates[c].confidence << "\n";
            for (const auto& line : candidates[c].text) std::cout << "    " << line << "\n";
        }
    }
    return 0;
}

int run_stats(const std::string& data) {
    const auto records = load_dataset(std::filesystem::path(data));
    std::array<std::size_t, 3> per_split{};
    std::array<std::size_t, 2> classes{};
    for (const auto& r : records) {
        ++per_split[static_cast<std::size_t>(r.split)];
        ++classes[classify_concat(r.tuple.a, r.tuple.b, r.tuple.r) == ResolutionClass::concat ? 0 : 1];
    }
    std::cout << "records " << records.size() << " (train " << per_split[0] << ", valid " << per_split[1]
              << ", test " << per_split[2] << ")\n";
    std::cout << "concat " << classes[0] << ", other " << classes[1] << "\n\n";
    std::cout << format_size_buckets(corpus_size_buckets(records));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Learned resolution of line-level merge conflicts"};
    app.set_config("--config", "", "key=value file with option defaults; flags override it");
    app.require_subcommand(1);

    ExtractArgs ex;
    auto* extract = app.add_subcommand("extract", "Mine merge tuples from a local git repository");
    extract->add_option("--repo", ex.repo, "Repository path")->required();
    extract->add_option("--out", ex.out, "Output JSONL dataset")->required();
    extract->add_option("--seed", ex.seed, "Split seed");
    extract->add_option("--splits", ex.splits, "train,valid,test fractions")->delimiter(',')->expected(3);
    extract->add_option("--max-line-length", ex.max_line, "Skip files with longer lines");
    extract->add_option("--max-file-bytes", ex.max_bytes, "Skip larger files");

    TrainArgs tr;
    auto* train = app.add_subcommand("train", "Train a model on the train split");
    train->add_option("--data", tr.data, "JSONL dataset")->required();
    train->add_option("--mode", tr.mode, "Input representation")
        ->check(CLI::IsMember({"naive", "linearized", "ltre", "aligned_naive", "aligned_linearized"}));
    train->add_option("--dim", tr.dim, "Embedding dimension")->check(CLI::PositiveNumber);
    train->add_option("--hidden", tr.hidden, "Encoder hidden size")->check(CLI::PositiveNumber);
    train->add_option("--epochs", tr.epochs, "Training epochs");
    train->add_option("--seed", tr.seed, "Initialization and shuffling seed");
    train->add_option("--out", tr.out, "Checkpoint path")->required();
    train->add_option("--l-max", tr.l_max, "Per-side line cap")->check(CLI::PositiveNumber);
    train->add_option("--max-output", tr.max_output, "Longest resolution in lines")->check(CLI::PositiveNumber);
    train->add_option("--vocab-size", tr.vocab_size, "BPE vocabulary size")
        ->check(CLI::Range(Vocabulary::base_size + 1, std::size_t{1} << 20));
    train->add_option("--batch", tr.batch, "Minibatch size")->check(CLI::PositiveNumber);
    train->add_option("--lr", tr.lr, "Adam learning rate")->check(CLI::PositiveNumber);
    train->add_option("--clip", tr.clip, "Gradient norm cap, 0 disables");
    train->add_option("--beam", tr.beam, "Beam width for validation")->check(CLI::PositiveNumber);
    train->add_option("--threads", tr.threads, "Gradient worker threads")->check(CLI::PositiveNumber);
    train->add_option("--log", tr.log, "CSV training log");

    ResolveArgs rs;
    auto* resolve = app.add_subcommand("resolve", "Resolve the conflicts of one file");
    resolve->add_option("--model", rs.model, "Checkpoint")->envname("MERGESYNTH_MODEL")->required();
    resolve->add_option("--file", rs.file, "Conflicted file")->required();
    resolve->add_option("--out", rs.out, "Write here instead of standard output");
    resolve->add_flag("--interactive", rs.interactive, "Choose among candidates at a prompt");
    resolve->add_option("--k", rs.k, "Beam width / candidates")->check(CLI::PositiveNumber);
    resolve->add_option("--threshold", rs.threshold, "Minimum confidence")->check(CLI::Range(0.0, 1.0));

    EvalArgs ev;
    auto* eval = app.add_subcommand("eval", "Score a model and/or baseline on a dataset split");
    eval->add_option("--model", ev.model, "Checkpoint")->envname("MERGESYNTH_MODEL");
    eval->add_option("--data", ev.data, "JSONL dataset")->required();
    eval->add_option("--split", ev.split, "Split to score")->check(CLI::IsMember({"train", "valid", "test"}));
    eval->add_option("--baseline", ev.baseline, "Also score a baseline")->check(CLI::IsMember({"scanmerge"}));
    eval->add_option("--k", ev.k, "Candidates per sample")->check(CLI::PositiveNumber);
    eval->add_option("--thresholds", ev.thresholds, "Confidence grid")->delimiter(',');
    eval->add_option("--threads", ev.threads, "Worker threads")->check(CLI::PositiveNumber);
    eval->add_option("--trials", ev.trials, "Baseline samples per region")->check(CLI::PositiveNumber);
    eval->add_option("--runs", ev.runs, "Baseline runs to average")->check(CLI::PositiveNumber);
    eval->add_option("--seed", ev.seed, "Baseline seed");
    eval->add_option("--validator", ev.validator, "Shell command judging baseline candidates on stdin");
    eval->add_option("--json", ev.json, "Write the report as JSON");
    eval->add_option("--csv", ev.csv, "Write the threshold sweep as CSV");

    ScanArgs sc;
    auto* scan = app.add_subcommand("scanmerge", "Sample interleaving candidates for each region of a file");
    scan->add_option("--file", sc.file, "Conflicted file")->required();
    scan->add_option("--trials", sc.trials, "Samples per region")->check(CLI::PositiveNumber);
    scan->add_option("--k", sc.k, "Candidates per region")->check(CLI::PositiveNumber);
    scan->add_option("--seed", sc.seed, "Sampling seed");
    scan->add_option("--validator", sc.validator, "Shell command judging candidates on stdin");

    std::string stats_data;
    auto* stats = app.add_subcommand("stats", "Dataset size distribution");
    stats->add_option("--data", stats_data, "JSONL dataset")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : k_exit_usage;
    }

    const bool resolving = resolve->parsed();
    try {
        if (extract->parsed()) return run_extract(ex);
        if (train->parsed()) return run_train(tr);
        if (resolving) return run_resolve(rs);
        if (eval->parsed()) return run_eval(ev);
        if (scan->parsed()) return run_scanmerge(sc);
        if (stats->parsed()) return run_stats(stats_data);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return k_exit_usage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return k_exit_usage;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return k_exit_data;
    } catch (const MalformedMarkers& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return k_exit_data;
    } catch (const EmptyCorpus& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return k_exit_data;
    } catch (const UnmappableTarget& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return k_exit_data;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return resolving ? 2 : 1;
    }
    return k_exit_usage;
}
