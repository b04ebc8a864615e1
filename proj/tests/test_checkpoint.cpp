#include "mergesynth/checkpoint.hpp"
#include "mergesynth/errors.hpp"

#include "synthetic.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>

using namespace mergesynth;

namespace {

Model small_model(std::uint64_t seed, Representation mode = Representation::aligned_linearized) {
    Rng rng(seed);
    std::vector<MergeTuple> tuples;
    for (int i = 0; i < 10; ++i) tuples.push_back(testing::structured_tuple(rng));
    Model m;
    m.vocab = train_bpe(testing::texts_of(tuples), 300);
    ModelConfig c;
    c.mode = mode;
    c.dim = 3;
    c.hidden = 2;
    c.l_max = 5;
    c.max_output = 7;
    c.vocab_size = m.vocab.size();
    c.seed = seed;
    m.params = ModelParams::initialize(c);
    m.meta = {{"epochs", 3}, {"note", "x"}};
    return m;
}

}  // namespace

TEST_CASE("checkpoint bytes round trip exactly") {
    const Model m = small_model(1);
    const std::string bytes = checkpoint_bytes(m);
    CHECK(bytes.substr(0, 8) == "MSYNCKPT");
    const Model back = checkpoint_from_bytes(bytes);
    CHECK(back.params.config == m.params.config);
    CHECK(back.vocab == m.vocab);
    CHECK(back.meta == m.meta);
    const auto a = m.params.tensors(), b = back.params.tensors();
    REQUIRE(a.size() == b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
        CHECK(a[k].first == b[k].first);
        CHECK(*a[k].second == *b[k].second);
    }
    CHECK(checkpoint_bytes(back) == bytes);
}

TEST_CASE("extreme values survive") {
    Model m = small_model(2, Representation::linearized);
    m.params.theta(0, 0) = -0.0;
    m.params.theta(1, 0) = 1e-308;
    m.params.theta(2, 0) = std::nextafter(1.0, 2.0);
    m.params.theta(3, 0) = -1.7976931348623157e308;
    const Model back = checkpoint_from_bytes(checkpoint_bytes(m));
    CHECK(std::signbit(back.params.theta(0, 0)));
    CHECK(back.params.theta == m.params.theta);
}

TEST_CASE("files round trip") {
    const Model m = small_model(3);
    const auto path = std::filesystem::temp_directory_path() / "mergesynth-test.ckpt";
    save_checkpoint(m, path);
    CHECK(checkpoint_bytes(load_checkpoint(path)) == checkpoint_bytes(m));
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_checkpoint(path), DataError);
}

TEST_CASE("damaged checkpoints are rejected") {
    const std::string bytes = checkpoint_bytes(small_model(4));
    CHECK_THROWS_AS(checkpoint_from_bytes(""), DataError);
    CHECK_THROWS_AS(checkpoint_from_bytes("NOTACKPT" + bytes.substr(8)), DataError);
    CHECK_THROWS_AS(checkpoint_from_bytes(bytes.substr(0, bytes.size() - 1)), DataError);
    CHECK_THROWS_AS(checkpoint_from_bytes(bytes + "x"), DataError);
    CHECK_THROWS_AS(checkpoint_from_bytes(bytes.substr(0, 30)), DataError);
    std::string version = bytes;
    version[8] = 2;
    CHECK_THROWS_AS(checkpoint_from_bytes(version), DataError);
    std::string nan = bytes;
    for (std::size_t k = nan.size() - 8; k < nan.size() - 1; ++k) nan[k] = '\xff';
    nan.back() = '\x7f';
    CHECK_THROWS_AS(checkpoint_from_bytes(nan), DataError);

    Model mismatch = small_model(5);
    mismatch.params.config.vocab_size = 259;
    CHECK_THROWS(checkpoint_from_bytes(checkpoint_bytes(mismatch)));
}

TEST_CASE("config json") {
    ModelConfig c;
    c.mode = Representation::ltre;
    c.dim = 7;
    c.seed = 99;
    CHECK(config_from_json(config_to_json(c)) == c);
}
