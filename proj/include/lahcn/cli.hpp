#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "lahcn/model.hpp"

namespace lahcn::cli {

// Paths plus the training section of a run. Relative paths in a config file
// are resolved against the file's directory.
struct RunConfig {
  std::filesystem::path hierarchy;
  std::filesystem::path train_corpus;
  std::filesystem::path valid_corpus;
  std::filesystem::path test_corpus;
  std::filesystem::path embeddings;
  std::filesystem::path checkpoint;
  std::filesystem::path output_dir = ".";
  TrainConfig training;
};

// JSON object with keys hierarchy, train_corpus, valid_corpus, test_corpus,
// embeddings, checkpoint, output_dir and a "training" object. Unknown keys
// are rejected with ConfigError.
RunConfig load_run_config(const std::filesystem::path& path);
RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir = {});

// Entry point of the `lahcn` tool. Returns the process exit code:
// 0 success, 2 config/parse error, 3 data consistency error, 4 numeric failure.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lahcn::cli
