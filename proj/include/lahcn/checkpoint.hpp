#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "lahcn/corpus.hpp"
#include "lahcn/hierarchy.hpp"
#include "lahcn/model.hpp"

namespace lahcn {

inline constexpr int kCheckpointVersion = 1;
inline constexpr const char* kCheckpointFormat = "lahcn-checkpoint";

nlohmann::json config_to_json(const TrainConfig& cfg);
// Overlays the keys of `j` onto `base`. ConfigError for unknown keys or
// ill-typed values.
TrainConfig config_from_json(const nlohmann::json& j, TrainConfig base = {});

struct Checkpoint {
  ModelParams params;
  Vocabulary vocab;
};

struct SaveOptions {
  // ISO-8601 creation time written as "created"; omitted when empty.
  std::string timestamp;
};

// One JSON document: format tag, version, config echo, hierarchy
// fingerprint, vocabulary and every tensor with its shape. Values are written
// in shortest round-trip form, so save/load is bit-exact.
std::string checkpoint_json(const ModelParams& params, const Vocabulary& vocab, const LabelHierarchy& hier,
                            const SaveOptions& options = {});
void save_checkpoint(const ModelParams& params, const Vocabulary& vocab, const LabelHierarchy& hier,
                     const std::filesystem::path& path, const SaveOptions& options = {});

// ParseError on malformed or truncated input, VersionError on an unknown
// format version, FingerprintError when `hier` differs from the hierarchy the
// model was trained on.
Checkpoint parse_checkpoint(const std::string& text, const LabelHierarchy& hier);
Checkpoint load_checkpoint(const std::filesystem::path& path, const LabelHierarchy& hier);

}  // namespace lahcn
