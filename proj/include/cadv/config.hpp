#pragma once

// Experiment configuration and its flat "key = value" text form.
//
// Recognized keys: lambda, epsilon, tau, lr, batch_size, epochs, seed, mode,
// fgsm_direction, d_h, n_layers, n_heads, d_proj, max_len, plus d_ff,
// proj_layers, dropout, embed_init_std, scheme and min_count, and the
// data-derived vocab_size and n_classes (written into checkpoints). Lines starting
// with '#' and blank lines are ignored.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "cadv/encoder.hpp"

namespace cadv {

enum class TrainMode { baseline, adversarial_only, contrastive_adversarial };
enum class FgsmDirection { ascent, paper_literal };
enum class LabelScheme { binary, three_class };

std::string to_string(TrainMode mode);
std::string to_string(FgsmDirection direction);
std::string to_string(LabelScheme scheme);
TrainMode parse_train_mode(std::string_view text);
FgsmDirection parse_fgsm_direction(std::string_view text);
LabelScheme parse_label_scheme(std::string_view text);

struct TrainConfig {
  double lambda = 0.3;   // weight of the contrastive term
  double epsilon = 0.005;
  double tau = 0.07;
  double learning_rate = 1e-3;
  std::size_t batch_size = 16;
  std::size_t epochs = 10;
  std::uint64_t seed = 42;
  FgsmDirection fgsm_direction = FgsmDirection::ascent;
  TrainMode mode = TrainMode::contrastive_adversarial;

  // 0 ≤ λ ≤ 1, ε ≥ 0, τ > 0, lr ≥ 0, batch_size ≥ 1; throws ConfigError.
  void validate() const;
};

struct ExperimentConfig {
  ModelConfig model;  // vocab_size and n_classes are filled in from the data
  TrainConfig train;
  LabelScheme scheme = LabelScheme::binary;
  std::size_t min_count = 1;
  // d_ff follows 2·d_h unless set explicitly.
  bool d_ff_explicit = false;
};

// Sets one key; unknown keys and malformed values throw ConfigError.
void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value);

ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

// Canonical text: every key, fixed order, shortest round-trip numbers.
std::string to_config_text(const ExperimentConfig& config);

// Shortest decimal string that parses back to exactly `value`.
std::string format_double(double value);

}  // namespace cadv
