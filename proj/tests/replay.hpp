#pragma once

// Re-runs a CLI command from the manifest it wrote and compares outputs.

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"

namespace replay {

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Outcome {
  int exit_code = 0;
  std::vector<std::string> compared;
  std::vector<std::string> differing;

  bool identical() const { return exit_code == 0 && !compared.empty() && differing.empty(); }
};

// Reads <original>/manifest.json, re-runs its argv with --out pointing at
// `fresh`, and compares every listed output byte for byte.
inline Outcome from_manifest(const std::filesystem::path& original, const std::filesystem::path& fresh) {
  const auto manifest = nlohmann::json::parse(slurp(original / "manifest.json"));
  auto argv = manifest.at("argv").get<std::vector<std::string>>();
  for (std::size_t i = 0; i + 1 < argv.size(); ++i) {
    if (argv[i] == "--out") argv[i + 1] = fresh.string();
  }
  std::filesystem::remove_all(fresh);
  std::ostringstream out, err;
  Outcome o;
  o.exit_code = cadv::cli::run(argv, out, err);
  for (const auto& name : manifest.at("outputs")) {
    const auto file = name.get<std::string>();
    o.compared.push_back(file);
    if (slurp(original / file) != slurp(fresh / file)) o.differing.push_back(file);
  }
  return o;
}

}  // namespace replay
