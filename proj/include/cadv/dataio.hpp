#pragma once

// Corpus records, stratified splitting, per-disease statistics and the
// synthetic stand-in corpus.
//
// Corpus files hold one JSON object per line with the fields "text", "label"
// and "disease", in that order. Newlines inside a text are written as the
// JSON escape \n, so a record never spans lines.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cadv/config.hpp"
#include "cadv/textprep.hpp"

namespace cadv {

enum class HealthLabel { health_mention = 0, non_health_mention = 1, figurative_mention = 2 };
inline constexpr std::size_t kHealthLabelCount = 3;

std::string to_string(HealthLabel label);
std::optional<HealthLabel> parse_health_label(std::string_view text);

// Disease tags in table order; "synthetic" is accepted in addition.
inline constexpr std::array<std::string_view, 10> kDiseases = {
    "alzheimers", "cancer",   "cough",      "depression", "fever",
    "headache",   "heart_attack", "migraine", "parkinsons", "stroke"};
inline constexpr std::string_view kSyntheticDisease = "synthetic";

bool is_known_disease(std::string_view tag);
// "Alzheimer's", "Heart attack", ...; unknown tags are returned unchanged.
std::string disease_display_name(std::string_view tag);

struct Example {
  std::string text;
  HealthLabel label = HealthLabel::non_health_mention;
  std::string disease;
};

// binary: health_mention -> 1, the other two -> 0.
// three_class: the enum value.
int label_map(HealthLabel label, LabelScheme scheme);
std::size_t class_count(LabelScheme scheme);

struct MalformedLine {
  std::size_t line = 0;  // 1-based
  std::string reason;
};

struct CorpusReport {
  std::vector<Example> examples;
  std::vector<MalformedLine> malformed;
};

// Blank lines are skipped. Malformed records are collected with their line
// numbers; if more than 10% of the non-blank lines are malformed the whole
// read fails with InputError listing them.
CorpusReport read_corpus(std::istream& in);
CorpusReport load_corpus(const std::filesystem::path& path);

std::string to_record(const Example& example);
void write_corpus(std::ostream& out, std::span<const Example> examples);
void save_corpus(const std::filesystem::path& path, std::span<const Example> examples);

struct SplitSpec {
  double train = 0.65;
  double val = 0.15;
  double test = 0.20;
  std::uint64_t seed = 42;
  bool by_disease = true;  // strata are label × disease, or label alone

  void validate() const;
};

struct Split {
  std::vector<std::size_t> train;  // indices into the input, ascending
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

// Overall sizes are floor(train·n) and floor(val·n), test takes the rest.
// Each stratum first gets the floor of its own share; the seats still missing
// from the overall targets go to the strata with the largest fractional
// remainders (earlier strata on ties). Members are shuffled per stratum before
// assignment. Empty input throws InputError.
Split stratified_split(std::span<const Example> examples, const SplitSpec& spec);
Split stratified_split(std::span<const std::string> strata, const SplitSpec& spec);

template <typename T>
std::vector<T> select(std::span<const T> items, std::span<const std::size_t> indices) {
  std::vector<T> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(items[i]);
  return out;
}

struct DiseaseCounts {
  std::string disease;
  std::array<std::size_t, kHealthLabelCount> by_label{};  // indexed by HealthLabel

  std::size_t total() const { return by_label[0] + by_label[1] + by_label[2]; }
};

struct DatasetStats {
  std::vector<DiseaseCounts> rows;  // the ten diseases first, then others by name

  std::array<std::size_t, kHealthLabelCount> totals() const;
  std::size_t total() const;
};

DatasetStats dataset_stats(std::span<const Example> examples);

// Aligned text table: Disease, Tweet Count, then one column per label, and a
// Total row.
std::string format_stats(const DatasetStats& stats);

// Tab-separated "disease, health, non_health, figurative" rows after a header.
DatasetStats parse_counts(std::string_view tsv);
DatasetStats load_counts(const std::filesystem::path& path);
std::string format_counts(const DatasetStats& stats);

// Per-disease label counts of the PHM2017 collection.
DatasetStats phm2017_counts();

// One placeholder example per counted tweet, in row then label order.
std::vector<Example> expand_counts(const DatasetStats& stats);

struct SynthOptions {
  double mention_prob = 0.2;  // leading @user
  double url_prob = 0.15;
  double hashtag_prob = 0.25;
  double emoji_prob = 0.3;
};

// Class counts follow the PHM2017 proportions exactly (rounded), diseases are
// drawn from each label's per-disease distribution, and the order is
// shuffled. Emojis come from `emojis`, independent of the label. Requires n ≥ 2.
std::vector<Example> synthesize_corpus(std::size_t n, std::uint64_t seed, const EmojiTable& emojis,
                                       const SynthOptions& options = {});

}  // namespace cadv
