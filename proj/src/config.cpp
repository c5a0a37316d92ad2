#include "cadv/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cadv/error.hpp"

namespace cadv {

std::string to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::baseline:
      return "baseline";
    case TrainMode::adversarial_only:
      return "adversarial_only";
    case TrainMode::contrastive_adversarial:
      return "contrastive_adversarial";
  }
  return "?";
}

std::string to_string(FgsmDirection direction) {
  return direction == FgsmDirection::ascent ? "ascent" : "paper_literal";
}

std::string to_string(LabelScheme scheme) { return scheme == LabelScheme::binary ? "binary" : "three_class"; }

TrainMode parse_train_mode(std::string_view text) {
  if (text == "baseline") return TrainMode::baseline;
  if (text == "adversarial_only") return TrainMode::adversarial_only;
  if (text == "contrastive_adversarial") return TrainMode::contrastive_adversarial;
  throw ConfigError("unknown mode '" + std::string(text) +
                    "' (expected baseline, adversarial_only or contrastive_adversarial)");
}

FgsmDirection parse_fgsm_direction(std::string_view text) {
  if (text == "ascent") return FgsmDirection::ascent;
  if (text == "paper_literal") return FgsmDirection::paper_literal;
  throw ConfigError("unknown fgsm_direction '" + std::string(text) + "' (expected ascent or paper_literal)");
}

LabelScheme parse_label_scheme(std::string_view text) {
  if (text == "binary") return LabelScheme::binary;
  if (text == "three_class") return LabelScheme::three_class;
  throw ConfigError("unknown scheme '" + std::string(text) + "' (expected binary or three_class)");
}

void TrainConfig::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda must be in [0, 1]");
  if (!(epsilon >= 0.0)) throw ConfigError("epsilon must be non-negative");
  if (!(tau > 0.0)) throw ConfigError("tau must be positive");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw ConfigError("lr must be a finite non-negative number");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_double(std::string_view key, std::string_view value) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size() || !std::isfinite(out)) {
    throw ConfigError("invalid number for " + std::string(key) + ": '" + std::string(value) + "'");
  }
  return out;
}

std::uint64_t parse_uint(std::string_view key, std::string_view value) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError("invalid non-negative integer for " + std::string(key) + ": '" + std::string(value) + "'");
  }
  return out;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

void apply_setting(ExperimentConfig& c, std::string_view key, std::string_view value) {
  key = trim(key);
  value = trim(value);
  auto size = [&] { return static_cast<std::size_t>(parse_uint(key, value)); };
  if (key == "lambda") c.train.lambda = parse_double(key, value);
  else if (key == "epsilon") c.train.epsilon = parse_double(key, value);
  else if (key == "tau") c.train.tau = parse_double(key, value);
  else if (key == "lr") c.train.learning_rate = parse_double(key, value);
  else if (key == "batch_size") c.train.batch_size = size();
  else if (key == "epochs") c.train.epochs = size();
  else if (key == "seed") c.train.seed = parse_uint(key, value);
  else if (key == "mode") c.train.mode = parse_train_mode(value);
  else if (key == "fgsm_direction") c.train.fgsm_direction = parse_fgsm_direction(value);
  else if (key == "d_h") c.model.d_h = size();
  else if (key == "n_layers") c.model.n_layers = size();
  else if (key == "n_heads") c.model.n_heads = size();
  else if (key == "d_proj") c.model.d_proj = size();
  else if (key == "max_len") c.model.max_len = size();
  else if (key == "d_ff") {
    c.model.d_ff = size();
    c.d_ff_explicit = true;
  } else if (key == "proj_layers") c.model.proj_layers = size();
  else if (key == "dropout") c.model.dropout = parse_double(key, value);
  else if (key == "embed_init_std") c.model.embed_init_std = parse_double(key, value);
  else if (key == "scheme") c.scheme = parse_label_scheme(value);
  else if (key == "min_count") c.min_count = size();
  else if (key == "vocab_size") c.model.vocab_size = size();
  else if (key == "n_classes") c.model.n_classes = size();
  else throw ConfigError("unknown config key '" + std::string(key) + "'");

  if (!c.d_ff_explicit) c.model.d_ff = 2 * c.model.d_h;
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig config;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    apply_setting(config, line.substr(0, eq), line.substr(eq + 1));
  }
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string to_config_text(const ExperimentConfig& c) {
  std::ostringstream out;
  out << "lambda = " << format_double(c.train.lambda) << '\n'
      << "epsilon = " << format_double(c.train.epsilon) << '\n'
      << "tau = " << format_double(c.train.tau) << '\n'
      << "lr = " << format_double(c.train.learning_rate) << '\n'
      << "batch_size = " << c.train.batch_size << '\n'
      << "epochs = " << c.train.epochs << '\n'
      << "seed = " << c.train.seed << '\n'
      << "mode = " << to_string(c.train.mode) << '\n'
      << "fgsm_direction = " << to_string(c.train.fgsm_direction) << '\n'
      << "d_h = " << c.model.d_h << '\n'
      << "n_layers = " << c.model.n_layers << '\n'
      << "n_heads = " << c.model.n_heads << '\n'
      << "d_proj = " << c.model.d_proj << '\n'
      << "max_len = " << c.model.max_len << '\n'
      << "d_ff = " << c.model.d_ff << '\n'
      << "proj_layers = " << c.model.proj_layers << '\n'
      << "dropout = " << format_double(c.model.dropout) << '\n'
      << "embed_init_std = " << format_double(c.model.embed_init_std) << '\n'
      << "scheme = " << to_string(c.scheme) << '\n'
      << "min_count = " << c.min_count << '\n';
  if (c.model.vocab_size > 0) out << "vocab_size = " << c.model.vocab_size << '\n';
  out << "n_classes = " << c.model.n_classes << '\n';
  return out.str();
}

}  // namespace cadv
