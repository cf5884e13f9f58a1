#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "ecnlab/corrector.hpp"

// Versioned JSON containers for trained models. Every file carries the tagset
// and a feature-schema digest; loading refuses a digest that does not match
// the extractor it will be used with.

namespace ecnlab {

nlohmann::json rs_spec_to_json(const RelevantSubsetSpec& spec);
RelevantSubsetSpec rs_spec_from_json(const nlohmann::json& j);

std::string base_model_to_json(const BaseModel& model);
BaseModel base_model_from_json(const std::string& text, const FeatureExtractor& fx);

std::string corrector_to_json(const EcnModel& model);
EcnModel corrector_from_json(const std::string& text, const FeatureExtractor& fx);

void save_base_model(const BaseModel& model, const std::filesystem::path& path);
BaseModel load_base_model(const std::filesystem::path& path, const FeatureExtractor& fx);

void save_corrector(const EcnModel& model, const std::filesystem::path& path);
EcnModel load_corrector(const std::filesystem::path& path, const FeatureExtractor& fx);

// SHA-256 of the serialized form, for provenance sidecars.
std::string base_model_digest(const BaseModel& model);
std::string corrector_digest(const EcnModel& model);

}  // namespace ecnlab
