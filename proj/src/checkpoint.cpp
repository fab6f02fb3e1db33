#include "lahcn/checkpoint.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "lahcn/error.hpp"

namespace lahcn {

using nlohmann::json;

json config_to_json(const TrainConfig& c) {
  return json{
      {"seed", c.seed},
      {"learning_rate", c.learning_rate},
      {"optimizer", to_string(c.optimizer)},
      {"batch_size", c.batch_size},
      {"max_epochs", c.max_epochs},
      {"patience", c.patience},
      {"max_len", c.max_len},
      {"dim", c.dim},
      {"component_dim", c.component_dim},
      {"components", c.components},
      {"hidden_dim", c.hidden_dim},
      {"alpha", c.alpha},
      {"variant", to_string(c.variant)},
      {"freeze_embeddings", c.freeze_embeddings},
      {"projection", projection_name(c.projection)},
      {"leaky_slope", c.leaky_slope},
      {"clip_norm", c.clip_norm},
      {"min_count", c.min_count},
  };
}

namespace {

template <typename T>
T get_as(const json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type");
  }
}

std::size_t get_count(const json& v, const std::string& key) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
    throw ConfigError("config key '" + key + "' must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

}  // namespace

TrainConfig config_from_json(const json& j, TrainConfig c) {
  if (!j.is_object()) throw ConfigError("train config must be an object");
  for (const auto& [key, v] : j.items()) {
    if (key == "seed") c.seed = get_count(v, key);
    else if (key == "learning_rate") c.learning_rate = get_as<double>(v, key);
    else if (key == "optimizer") c.optimizer = parse_optimizer(get_as<std::string>(v, key));
    else if (key == "batch_size") c.batch_size = get_count(v, key);
    else if (key == "max_epochs") c.max_epochs = get_count(v, key);
    else if (key == "patience") c.patience = get_count(v, key);
    else if (key == "max_len") c.max_len = get_count(v, key);
    else if (key == "dim") c.dim = get_count(v, key);
    else if (key == "component_dim") c.component_dim = get_count(v, key);
    else if (key == "components") {
      c.components.clear();
      if (v.is_array()) {
        for (const auto& e : v) c.components.push_back(get_count(e, key));
      } else {
        c.components.push_back(get_count(v, key));
      }
    } else if (key == "hidden_dim") c.hidden_dim = get_count(v, key);
    else if (key == "alpha") c.alpha = get_as<double>(v, key);
    else if (key == "variant") c.variant = parse_variant(get_as<std::string>(v, key));
    else if (key == "freeze_embeddings") c.freeze_embeddings = get_as<bool>(v, key);
    else if (key == "projection") c.projection = parse_projection(get_as<std::string>(v, key));
    else if (key == "leaky_slope") c.leaky_slope = get_as<double>(v, key);
    else if (key == "clip_norm") c.clip_norm = get_as<double>(v, key);
    else if (key == "min_count") c.min_count = get_count(v, key);
    else throw ConfigError("unknown train config key '" + key + "'");
  }
  return c;
}

std::string checkpoint_json(const ModelParams& params, const Vocabulary& vocab, const LabelHierarchy& hier,
                            const SaveOptions& options) {
  json j;
  j["format"] = kCheckpointFormat;
  j["version"] = kCheckpointVersion;
  if (!options.timestamp.empty()) j["created"] = options.timestamp;
  j["hierarchy_fingerprint"] = hier.fingerprint();
  j["config"] = config_to_json(params.config);
  j["vocabulary"] = vocab.tokens();
  json tensors = json::array();
  for (const auto& [name, m] : params.named_tensors()) {
    tensors.push_back({{"name", name},
                       {"rows", m->rows()},
                       {"cols", m->cols()},
                       {"values", std::vector<double>(m->data().begin(), m->data().end())}});
  }
  j["tensors"] = std::move(tensors);
  return j.dump() + "\n";
}

void save_checkpoint(const ModelParams& params, const Vocabulary& vocab, const LabelHierarchy& hier,
                     const std::filesystem::path& path, const SaveOptions& options) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write checkpoint " + path.string());
  out << checkpoint_json(params, vocab, hier, options);
  if (!out) throw ConfigError("failed writing checkpoint " + path.string());
}

Checkpoint parse_checkpoint(const std::string& text, const LabelHierarchy& hier) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("checkpoint is not a complete JSON document: ") + e.what());
  }
  try {
    if (!j.is_object() || j.value("format", "") != kCheckpointFormat) throw ParseError("not a checkpoint file");
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw VersionError("unsupported checkpoint version " + std::to_string(version));
    }
    const auto fp = j.at("hierarchy_fingerprint").get<std::string>();
    if (fp != hier.fingerprint()) {
      throw FingerprintError("checkpoint was trained on hierarchy " + fp + ", got " + hier.fingerprint());
    }

    Checkpoint c{ModelParams{}, Vocabulary::from_tokens(j.at("vocabulary").get<std::vector<std::string>>())};
    c.params.config = config_from_json(j.at("config"));
    c.params.levels.resize(hier.depth());

    std::map<std::string, Matrix> stored;
    for (const auto& t : j.at("tensors")) {
      const auto name = t.at("name").get<std::string>();
      Matrix m(t.at("rows").get<std::size_t>(), t.at("cols").get<std::size_t>(),
               t.at("values").get<std::vector<double>>());
      if (!stored.emplace(name, std::move(m)).second) throw ParseError("duplicate tensor " + name);
    }
    for (auto& [name, slot] : c.params.named_tensors()) {
      auto it = stored.find(name);
      if (it == stored.end()) throw ParseError("checkpoint lacks tensor " + name);
      *slot = std::move(it->second);
      stored.erase(it);
    }
    if (!stored.empty()) throw ParseError("checkpoint has unexpected tensor " + stored.begin()->first);

    const std::size_t d = c.params.config.dim;
    if (c.params.embedding.rows() != c.vocab.size() || c.params.embedding.cols() != d) {
      throw ParseError("embedding tensor does not match vocabulary/dim");
    }
    for (std::size_t h = 1; h <= hier.depth(); ++h) {
      if (c.params.levels[h - 1].label_emb.rows() != hier.level_size(h)) {
        throw ParseError("level " + std::to_string(h) + " label embeddings do not match the hierarchy");
      }
    }
    if (c.params.global.W2.cols() != hier.size()) throw ParseError("global head width does not match the hierarchy");
    return c;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed checkpoint: ") + e.what());
  }
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const LabelHierarchy& hier) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_checkpoint(ss.str(), hier);
}

}  // namespace lahcn
