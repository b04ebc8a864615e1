#pragma once

#include "mergesynth/bpe.hpp"
#include "mergesynth/model.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <string_view>

namespace mergesynth {

/// Everything inference needs: tokenizer, configuration and parameters.
struct Model {
    Vocabulary vocab;
    ModelParams params;
    /// Free-form provenance (seeds, epochs, validation scores).
    nlohmann::json meta = nlohmann::json::object();
};

inline constexpr std::string_view k_checkpoint_magic = "MSYNCKPT";
inline constexpr std::uint32_t k_checkpoint_version = 1;

/// Layout: magic, u32 version, u64 header length, JSON header (config,
/// vocabulary, tensor shapes, meta), then every tensor as column-major
/// little-endian doubles in header order.
std::string checkpoint_bytes(const Model& model);
/// Throws DataError.
Model checkpoint_from_bytes(std::string_view bytes);

void save_checkpoint(const Model& model, const std::filesystem::path& path);
Model load_checkpoint(const std::filesystem::path& path);

nlohmann::json config_to_json(const ModelConfig& c);
ModelConfig config_from_json(const nlohmann::json& j);

}  // namespace mergesynth
