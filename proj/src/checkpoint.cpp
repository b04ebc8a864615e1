#include "mergesynth/checkpoint.hpp"

#include "mergesynth/errors.hpp"

#include <bit>
#include <fstream>
#include <sstream>

namespace mergesynth {

namespace {

    template <class T>
    void put(std::string& out, T value) {
        for (std::size_t k = 0; k < sizeof(T); ++k) out.push_back(static_cast<char>((value >> (8 * k)) & 0xff));
    }

    template <class T>
    T take(std::string_view bytes, std::size_t& at) {
        if (bytes.size() - at < sizeof(T)) throw DataError("checkpoint truncated");
        T value = 0;
        for (std::size_t k = 0; k < sizeof(T); ++k)
            value |= static_cast<T>(static_cast<unsigned char>(bytes[at + k])) << (8 * k);
        at += sizeof(T);
        return value;
    }

    void put_double(std::string& out, double d) { put(out, std::bit_cast<std::uint64_t>(d)); }
    double take_double(std::string_view bytes, std::size_t& at) {
        return std::bit_cast<double>(take<std::uint64_t>(bytes, at));
    }

}  // namespace

nlohmann::json config_to_json(const ModelConfig& c) {
    return {{"mode", std::string(to_string(c.mode))},
            {"dim", c.dim},
            {"hidden", c.hidden},
            {"l_max", c.l_max},
            {"max_output", c.max_output},
            {"vocab_size", c.vocab_size},
            {"seed", c.seed}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.mode = representation_from_string(j.at("mode").get<std::string>());
    c.dim = j.at("dim").get<std::size_t>();
    c.hidden = j.at("hidden").get<std::size_t>();
    c.l_max = j.at("l_max").get<std::size_t>();
    c.max_output = j.at("max_output").get<std::size_t>();
    c.vocab_size = j.at("vocab_size").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

std::string checkpoint_bytes(const Model& model) {
    nlohmann::json header;
    header["config"] = config_to_json(model.params.config);
    header["vocabulary"] = nlohmann::json::parse(model.vocab.to_json());
    header["meta"] = model.meta;
    auto& shapes = header["tensors"] = nlohmann::json::array();
    const auto tensors = model.params.tensors();
    for (const auto& [name, m] : tensors) shapes.push_back({{"name", name}, {"rows", m->rows()}, {"cols", m->cols()}});
    const std::string text = header.dump();

    std::string out(k_checkpoint_magic);
    put<std::uint32_t>(out, k_checkpoint_version);
    put<std::uint64_t>(out, text.size());
    out += text;
    for (const auto& [name, m] : tensors) {
        for (Eigen::Index k = 0; k < m->size(); ++k) put_double(out, m->data()[k]);
    }
    return out;
}

Model checkpoint_from_bytes(std::string_view bytes) {
    if (bytes.substr(0, k_checkpoint_magic.size()) != k_checkpoint_magic) throw DataError("not a model checkpoint");
    std::size_t at = k_checkpoint_magic.size();
    const auto version = take<std::uint32_t>(bytes, at);
    if (version != k_checkpoint_version) {
        throw DataError("unsupported checkpoint version " + std::to_string(version));
    }
    const auto length = take<std::uint64_t>(bytes, at);
    if (length > bytes.size() - at) throw DataError("checkpoint header truncated");
    Model model;
    try {
        const auto header = nlohmann::json::parse(bytes.substr(at, length));
        at += length;
        model.params = ModelParams::zeros(config_from_json(header.at("config")));
        model.vocab = Vocabulary::from_json(header.at("vocabulary").dump());
        model.meta = header.at("meta");
        const auto& shapes = header.at("tensors");
        auto tensors = model.params.tensors();
        if (shapes.size() != tensors.size()) throw DataError("checkpoint tensor count mismatch");
        for (std::size_t k = 0; k < tensors.size(); ++k) {
            const auto& s = shapes[k];
            Matrix& m = *tensors[k].second;
            if (s.at("name").get<std::string>() != tensors[k].first || s.at("rows").get<Eigen::Index>() != m.rows() ||
                s.at("cols").get<Eigen::Index>() != m.cols()) {
                throw DataError("checkpoint tensor " + tensors[k].first + " has an unexpected shape");
            }
        }
        for (auto& [name, m] : tensors) {
            for (Eigen::Index k = 0; k < m->size(); ++k) m->data()[k] = take_double(bytes, at);
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("checkpoint header: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw DataError(std::string("checkpoint header: ") + e.what());
    }
    if (at != bytes.size()) throw DataError("trailing bytes after checkpoint data");
    if (model.vocab.size() != model.params.config.vocab_size) {
        throw DataError("checkpoint vocabulary size differs from its configuration");
    }
    if (!model.params.all_finite()) throw DataError("checkpoint holds non-finite parameters");
    return model;
}

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    const std::string bytes = checkpoint_bytes(model);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("cannot write " + path.string());
}

Model load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return checkpoint_from_bytes(buf.str());
}

}  // namespace mergesynth
