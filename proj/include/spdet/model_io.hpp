#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "spdet/boost.hpp"
#include "spdet/pauc.hpp"

namespace spdet {

struct ModelFile {
    BoostedModel model;
    std::optional<PaucModel> pauc;
    nlohmann::json run_config = nlohmann::json::object();
    std::string negative_cache;  // path of the final hard-negative responses, may be empty
};

nlohmann::json model_to_json(const ModelFile& mf);
ModelFile model_from_json(const nlohmann::json& j);

std::string serialize_model(const ModelFile& mf);
ModelFile parse_model(const std::string& text);

void save_model(const std::filesystem::path& path, const ModelFile& mf);
ModelFile load_model(const std::filesystem::path& path);

/// Weak-learner responses of negatives with their source image ids.
struct NegativeCache {
    std::vector<int> image_ids;
    ResponseMatrix responses;
};

/// One line per sample: "<image id> <string of + and ->".
void save_negative_cache(const std::filesystem::path& path, const NegativeCache& cache);
NegativeCache load_negative_cache(const std::filesystem::path& path);

}  // namespace spdet
