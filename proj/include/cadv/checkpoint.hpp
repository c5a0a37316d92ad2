#pragma once

// Binary model checkpoints; layout in docs/checkpoint_format.md.

#include <filesystem>

#include "cadv/config.hpp"
#include "cadv/encoder.hpp"

namespace cadv {

struct Checkpoint {
  ExperimentConfig config;
  ModelParams params;
};

void save_checkpoint(const std::filesystem::path& path, const ExperimentConfig& config, const ModelParams& params);
// Throws IoError on unreadable files and InputError on malformed contents,
// including arrays whose names or shapes disagree with the stored config.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace cadv
