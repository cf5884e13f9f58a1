#include "ecnlab/model_io.hpp"

#include <fstream>
#include <sstream>

#include "ecnlab/digest.hpp"
#include "ecnlab/error.hpp"

namespace ecnlab {

namespace {

using json = nlohmann::json;

constexpr int kFormatVersion = 1;
constexpr const char* kPixelSchema = "pixels-3ch-v1";

json tagset_to_json(const TagSet& ts) {
  return json{{"labels", ts.labels}, {"background_index", ts.background_index}};
}

TagSet tagset_from_json(const json& j) {
  TagSet ts;
  ts.labels = j.at("labels").get<std::vector<std::string>>();
  ts.background_index = j.at("background_index").get<int>();
  return ts;
}

json mlp_to_json(const Mlp& net) {
  return json{{"input_dim", net.input_dim()},
              {"hidden", net.hidden_dims()},
              {"output_dim", net.output_dim()},
              {"params", net.params_flat()}};
}

Mlp mlp_from_json(const json& j) {
  Mlp net(j.at("input_dim").get<int>(), j.at("hidden").get<std::vector<int>>(),
          j.at("output_dim").get<int>(), 0);
  net.set_params_flat(j.at("params").get<std::vector<double>>());
  return net;
}

void check_version(const json& j, const std::string& what) {
  if (j.value("format", "") != "ecnlab-model" || j.value("version", 0) != kFormatVersion) {
    throw ConfigError(what + ": not an ecnlab model file (or unsupported version)");
  }
}

json parse(const std::string& text, const std::string& what) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ConfigError(what + ": invalid JSON");
  return j;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

}  // namespace

json rs_spec_to_json(const RelevantSubsetSpec& spec) {
  return json{
      {"variant", to_string(spec.variant)},
      {"neighbor_radius", spec.neighbor_radius},
      {"grid_window", spec.grid_window},
      {"ablation_fill",
       spec.ablation_fill == AblationFill::random_floats ? "random_floats" : "invalid_symbol"},
      {"neighbor_source",
       spec.neighbor_source == NeighborSource::observed ? "observed" : "predicted"},
      {"prediction_form", spec.prediction_form == PredictionForm::kind_default
                              ? "kind_default"
                              : (spec.prediction_form == PredictionForm::hard ? "hard" : "soft")},
      {"n_token_features", spec.n_token_features},
      {"fill_seed", spec.fill_seed},
  };
}

RelevantSubsetSpec rs_spec_from_json(const json& j) {
  RelevantSubsetSpec spec;
  spec.variant = rs_variant_from_string(j.value("variant", "full"));
  spec.neighbor_radius = j.value("neighbor_radius", spec.neighbor_radius);
  spec.grid_window = j.value("grid_window", spec.grid_window);
  const std::string fill = j.value("ablation_fill", "random_floats");
  if (fill == "random_floats") {
    spec.ablation_fill = AblationFill::random_floats;
  } else if (fill == "invalid_symbol") {
    spec.ablation_fill = AblationFill::invalid_symbol;
  } else {
    throw ConfigError("unknown ablation_fill: " + fill);
  }
  const std::string src = j.value("neighbor_source", "predicted");
  if (src == "predicted") {
    spec.neighbor_source = NeighborSource::predicted;
  } else if (src == "observed") {
    spec.neighbor_source = NeighborSource::observed;
  } else {
    throw ConfigError("unknown neighbor_source: " + src);
  }
  const std::string form = j.value("prediction_form", "kind_default");
  if (form == "kind_default") {
    spec.prediction_form = PredictionForm::kind_default;
  } else if (form == "hard") {
    spec.prediction_form = PredictionForm::hard;
  } else if (form == "soft") {
    spec.prediction_form = PredictionForm::soft;
  } else {
    throw ConfigError("unknown prediction_form: " + form);
  }
  spec.n_token_features = j.value("n_token_features", spec.n_token_features);
  spec.fill_seed = j.value("fill_seed", spec.fill_seed);
  return spec;
}

std::string base_model_to_json(const BaseModel& model) {
  json j;
  j["format"] = "ecnlab-model";
  j["version"] = kFormatVersion;
  if (std::holds_alternative<CrfModel>(model)) {
    const CrfModel& crf = std::get<CrfModel>(model);
    j["kind"] = "crf";
    j["tagset"] = tagset_to_json(crf.tagset());
    j["feature_schema"] = crf.feature_schema_digest();
    j["features"] = crf.feature_names();
    j["unary"] = crf.unary();
    j["transitions"] = crf.transitions();
    j["trained"] = crf.trained();
  } else {
    const PatchClassifier& patch = std::get<PatchClassifier>(model);
    j["kind"] = "patch";
    j["tagset"] = tagset_to_json(patch.tagset);
    j["feature_schema"] = kPixelSchema;
    j["window"] = patch.window;
    j["net"] = mlp_to_json(patch.net);
  }
  return j.dump();
}

BaseModel base_model_from_json(const std::string& text, const FeatureExtractor& fx) {
  const json j = parse(text, "base model");
  check_version(j, "base model");
  const std::string kind = j.value("kind", "");
  if (kind == "crf") {
    const std::string schema = j.at("feature_schema").get<std::string>();
    if (schema != fx.schema_digest()) {
      throw ConfigError("crf model: feature schema mismatch (file " + schema + ", extractor " +
                        fx.schema_digest() + ")");
    }
    return crf_model_from_parts(tagset_from_json(j.at("tagset")), schema,
                                j.at("features").get<std::vector<std::string>>(),
                                j.at("unary").get<std::vector<double>>(),
                                j.at("transitions").get<std::vector<double>>(),
                                j.value("trained", true));
  }
  if (kind == "patch") {
    PatchClassifier patch;
    patch.tagset = tagset_from_json(j.at("tagset"));
    patch.window = j.at("window").get<int>();
    patch.net = mlp_from_json(j.at("net"));
    return patch;
  }
  throw ConfigError("base model: unknown kind '" + kind + "'");
}

std::string corrector_to_json(const EcnModel& model) {
  json j;
  j["format"] = "ecnlab-model";
  j["version"] = kFormatVersion;
  if (std::holds_alternative<SeqCorrector>(model)) {
    const SeqCorrector& g = std::get<SeqCorrector>(model);
    j["kind"] = "seq_corrector";
    j["tagset"] = tagset_to_json(g.tagset());
    j["feature_schema"] = g.feature_schema_digest();
    j["rs_spec"] = rs_spec_to_json(g.spec());
    j["features"] = g.feature_names();
    j["weights"] = g.weights();
  } else {
    const GridCorrector& g = std::get<GridCorrector>(model);
    j["kind"] = "grid_corrector";
    j["tagset"] = tagset_to_json(g.tagset());
    j["feature_schema"] = kPixelSchema;
    j["rs_spec"] = rs_spec_to_json(g.spec());
    j["net"] = mlp_to_json(g.net());
  }
  return j.dump();
}

EcnModel corrector_from_json(const std::string& text, const FeatureExtractor& fx) {
  const json j = parse(text, "corrector");
  check_version(j, "corrector");
  const std::string kind = j.value("kind", "");
  if (kind == "seq_corrector") {
    const std::string schema = j.at("feature_schema").get<std::string>();
    if (schema != fx.schema_digest()) {
      throw ConfigError("seq corrector: feature schema mismatch");
    }
    return seq_corrector_from_parts(tagset_from_json(j.at("tagset")),
                                    rs_spec_from_json(j.at("rs_spec")), schema,
                                    j.at("features").get<std::vector<std::string>>(),
                                    j.at("weights").get<std::vector<double>>());
  }
  if (kind == "grid_corrector") {
    return GridCorrector(tagset_from_json(j.at("tagset")), rs_spec_from_json(j.at("rs_spec")),
                         mlp_from_json(j.at("net")));
  }
  throw ConfigError("corrector: unknown kind '" + kind + "'");
}

void save_base_model(const BaseModel& model, const std::filesystem::path& path) {
  write_file(path, base_model_to_json(model));
}

BaseModel load_base_model(const std::filesystem::path& path, const FeatureExtractor& fx) {
  return base_model_from_json(read_file(path), fx);
}

void save_corrector(const EcnModel& model, const std::filesystem::path& path) {
  write_file(path, corrector_to_json(model));
}

EcnModel load_corrector(const std::filesystem::path& path, const FeatureExtractor& fx) {
  return corrector_from_json(read_file(path), fx);
}

std::string base_model_digest(const BaseModel& model) {
  return sha256_hex(base_model_to_json(model));
}

std::string corrector_digest(const EcnModel& model) {
  return sha256_hex(corrector_to_json(model));
}

}  // namespace ecnlab
