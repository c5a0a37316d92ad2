#include "cadv/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "cadv/error.hpp"
#include "cadv/rng.hpp"

namespace cadv {

namespace {

constexpr std::array<std::string_view, kHealthLabelCount> kLabelNames = {"health_mention", "non_health_mention",
                                                                         "figurative_mention"};

constexpr std::array<std::string_view, 10> kDiseaseDisplay = {
    "Alzheimer's", "Cancer", "Cough", "Depression", "Fever", "Headache", "Heart attack", "Migraine", "Parkinson's",
    "Stroke"};

// Health, non-health and figurative counts per disease, in kDiseases order.
constexpr std::array<std::array<std::size_t, 3>, 10> kPhm2017 = {{
    {249, 1374, 92},
    {302, 1239, 150},
    {331, 433, 688},
    {517, 711, 351},
    {517, 342, 625},
    {791, 112, 526},
    {209, 349, 1060},
    {904, 400, 215},
    {153, 1362, 53},
    {255, 1000, 432},
}};

std::size_t disease_index(std::string_view tag) {
  const auto it = std::find(kDiseases.begin(), kDiseases.end(), tag);
  return static_cast<std::size_t>(it - kDiseases.begin());
}

std::size_t floor_share(double fraction, std::size_t n) {
  // The epsilon keeps exact products such as 0.15 * 100 from flooring down.
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
}

}  // namespace

std::string to_string(HealthLabel label) { return std::string(kLabelNames[static_cast<std::size_t>(label)]); }

std::optional<HealthLabel> parse_health_label(std::string_view text) {
  for (std::size_t i = 0; i < kLabelNames.size(); ++i) {
    if (kLabelNames[i] == text) return static_cast<HealthLabel>(i);
  }
  return std::nullopt;
}

bool is_known_disease(std::string_view tag) {
  return tag == kSyntheticDisease || disease_index(tag) < kDiseases.size();
}

std::string disease_display_name(std::string_view tag) {
  const std::size_t i = disease_index(tag);
  return i < kDiseases.size() ? std::string(kDiseaseDisplay[i]) : std::string(tag);
}

int label_map(HealthLabel label, LabelScheme scheme) {
  if (scheme == LabelScheme::binary) return label == HealthLabel::health_mention ? 1 : 0;
  return static_cast<int>(label);
}

std::size_t class_count(LabelScheme scheme) { return scheme == LabelScheme::binary ? 2 : kHealthLabelCount; }

CorpusReport read_corpus(std::istream& in) {
  CorpusReport report;
  std::string line;
  std::size_t line_no = 0;
  std::size_t records = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    ++records;
    auto reject = [&](std::string reason) { report.malformed.push_back({line_no, std::move(reason)}); };

    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      reject(std::string("not valid JSON: ") + e.what());
      continue;
    }
    if (!record.is_object()) {
      reject("record is not an object");
      continue;
    }
    bool complete = true;
    for (const char* field : {"text", "label", "disease"}) {
      if (!record.contains(field) || !record[field].is_string()) {
        reject(std::string("missing or non-string field \"") + field + "\"");
        complete = false;
        break;
      }
    }
    if (!complete) continue;

    Example ex;
    ex.text = record["text"].get<std::string>();
    const auto label_text = record["label"].get<std::string>();
    ex.disease = record["disease"].get<std::string>();
    const auto label = parse_health_label(label_text);
    if (ex.text.empty()) {
      reject("empty text");
    } else if (!label) {
      reject("unknown label \"" + label_text + "\"");
    } else if (!is_known_disease(ex.disease)) {
      reject("unknown disease \"" + ex.disease + "\"");
    } else {
      ex.label = *label;
      report.examples.push_back(std::move(ex));
    }
  }
  if (records > 0 && report.malformed.size() * 10 > records) {
    std::ostringstream msg;
    msg << report.malformed.size() << " of " << records << " records are malformed:";
    for (const auto& m : report.malformed) msg << "\n  line " << m.line << ": " << m.reason;
    throw InputError(msg.str());
  }
  return report;
}

CorpusReport load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read corpus " + path.string());
  return read_corpus(in);
}

std::string to_record(const Example& example) {
  nlohmann::ordered_json record;
  record["text"] = example.text;
  record["label"] = to_string(example.label);
  record["disease"] = example.disease;
  return record.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

void write_corpus(std::ostream& out, std::span<const Example> examples) {
  for (const auto& ex : examples) out << to_record(ex) << '\n';
}

void save_corpus(const std::filesystem::path& path, std::span<const Example> examples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write corpus " + path.string());
  write_corpus(out, examples);
  if (!out) throw IoError("write failed for " + path.string());
}

void SplitSpec::validate() const {
  if (!(train > 0.0 && val > 0.0 && test > 0.0)) throw ConfigError("split fractions must be positive");
  if (std::abs(train + val + test - 1.0) > 1e-9) throw ConfigError("split fractions must sum to 1");
}

Split stratified_split(std::span<const std::string> strata, const SplitSpec& spec) {
  spec.validate();
  if (strata.empty()) throw InputError("stratified_split: no examples");

  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < strata.size(); ++i) groups[strata[i]].push_back(i);

  struct Quota {
    std::vector<std::size_t>* members;
    std::size_t train = 0;
    std::size_t val = 0;
  };
  std::vector<Quota> quotas;
  for (auto& [key, members] : groups) {
    quotas.push_back({&members, floor_share(spec.train, members.size()), floor_share(spec.val, members.size())});
  }

  // Hand the seats missing from an overall target to the largest remainders.
  auto top_up = [&](double fraction, std::size_t Quota::*field) {
    const std::size_t target = floor_share(fraction, strata.size());
    std::size_t assigned = 0;
    for (const auto& q : quotas) assigned += q.*field;
    std::vector<std::size_t> order(quotas.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto remainder = [&](std::size_t s) {
      return fraction * static_cast<double>(quotas[s].members->size()) - static_cast<double>(quotas[s].*field);
    };
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainder(a) > remainder(b); });
    for (std::size_t s : order) {
      if (assigned >= target) break;
      auto& q = quotas[s];
      if (q.train + q.val < q.members->size()) {
        ++(q.*field);
        ++assigned;
      }
    }
  };
  top_up(spec.train, &Quota::train);
  top_up(spec.val, &Quota::val);

  Split split;
  Rng rng(spec.seed);
  for (auto& q : quotas) {
    auto& members = *q.members;
    rng.shuffle(std::span(members));
    for (std::size_t i = 0; i < members.size(); ++i) {
      auto& dest = i < q.train ? split.train : (i < q.train + q.val ? split.val : split.test);
      dest.push_back(members[i]);
    }
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.val.begin(), split.val.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

Split stratified_split(std::span<const Example> examples, const SplitSpec& spec) {
  std::vector<std::string> strata;
  strata.reserve(examples.size());
  for (const auto& ex : examples) {
    strata.push_back(spec.by_disease ? to_string(ex.label) + "|" + ex.disease : to_string(ex.label));
  }
  return stratified_split(std::span<const std::string>(strata), spec);
}

std::array<std::size_t, kHealthLabelCount> DatasetStats::totals() const {
  std::array<std::size_t, kHealthLabelCount> t{};
  for (const auto& row : rows) {
    for (std::size_t l = 0; l < kHealthLabelCount; ++l) t[l] += row.by_label[l];
  }
  return t;
}

std::size_t DatasetStats::total() const {
  const auto t = totals();
  return t[0] + t[1] + t[2];
}

DatasetStats dataset_stats(std::span<const Example> examples) {
  DatasetStats stats;
  for (auto tag : kDiseases) stats.rows.push_back({std::string(tag), {}});
  std::map<std::string, DiseaseCounts> others;
  for (const auto& ex : examples) {
    const std::size_t i = disease_index(ex.disease);
    DiseaseCounts& row = i < kDiseases.size() ? stats.rows[i] : others[ex.disease];
    row.disease = ex.disease;
    ++row.by_label[static_cast<std::size_t>(ex.label)];
  }
  for (auto& [name, row] : others) stats.rows.push_back(row);
  return stats;
}

std::string format_stats(const DatasetStats& stats) {
  const std::array<std::string, 5> header = {"Disease", "Tweet Count", "Health Mention", "Non-Health Mention",
                                             "Figurative Mention"};
  std::vector<std::array<std::string, 5>> body;
  auto add_row = [&](std::string name, std::size_t total, const std::array<std::size_t, 3>& by_label) {
    body.push_back({std::move(name), std::to_string(total), std::to_string(by_label[0]),
                    std::to_string(by_label[1]), std::to_string(by_label[2])});
  };
  for (const auto& row : stats.rows) add_row(disease_display_name(row.disease), row.total(), row.by_label);
  add_row("Total", stats.total(), stats.totals());

  std::array<std::size_t, 5> width{};
  for (std::size_t c = 0; c < 5; ++c) width[c] = header[c].size();
  for (const auto& r : body) {
    for (std::size_t c = 0; c < 5; ++c) width[c] = std::max(width[c], r[c].size());
  }
  std::ostringstream out;
  auto emit = [&](const std::array<std::string, 5>& r) {
    out << std::left << std::setw(static_cast<int>(width[0])) << r[0];
    for (std::size_t c = 1; c < 5; ++c) out << "  " << std::right << std::setw(static_cast<int>(width[c])) << r[c];
    out << '\n';
  };
  emit(header);
  std::size_t rule = width[0];
  for (std::size_t c = 1; c < 5; ++c) rule += 2 + width[c];
  out << std::string(rule, '-') << '\n';
  for (std::size_t i = 0; i + 1 < body.size(); ++i) emit(body[i]);
  out << std::string(rule, '-') << '\n';
  emit(body.back());
  return out.str();
}

DatasetStats parse_counts(std::string_view tsv) {
  DatasetStats stats;
  std::istringstream in{std::string(tsv)};
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      if (line.rfind("disease", 0) == 0) continue;
    }
    std::vector<std::string> fields;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, '\t')) fields.push_back(cell);
    if (fields.size() != 4) {
      throw InputError("counts line " + std::to_string(line_no) + ": expected 4 tab-separated fields");
    }
    DiseaseCounts row;
    row.disease = fields[0];
    for (std::size_t l = 0; l < 3; ++l) {
      const auto& f = fields[l + 1];
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), row.by_label[l]);
      if (ec != std::errc() || ptr != f.data() + f.size()) {
        throw InputError("counts line " + std::to_string(line_no) + ": bad count \"" + f + "\"");
      }
    }
    stats.rows.push_back(row);
  }
  return stats;
}

DatasetStats load_counts(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read counts file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_counts(text.str());
}

std::string format_counts(const DatasetStats& stats) {
  std::ostringstream out;
  out << "disease\thealth_mention\tnon_health_mention\tfigurative_mention\n";
  for (const auto& row : stats.rows) {
    out << row.disease << '\t' << row.by_label[0] << '\t' << row.by_label[1] << '\t' << row.by_label[2] << '\n';
  }
  return out.str();
}

DatasetStats phm2017_counts() {
  DatasetStats stats;
  for (std::size_t i = 0; i < kDiseases.size(); ++i) stats.rows.push_back({std::string(kDiseases[i]), kPhm2017[i]});
  return stats;
}

std::vector<Example> expand_counts(const DatasetStats& stats) {
  std::vector<Example> out;
  out.reserve(stats.total());
  for (const auto& row : stats.rows) {
    for (std::size_t l = 0; l < kHealthLabelCount; ++l) {
      for (std::size_t i = 0; i < row.by_label[l]; ++i) {
        out.push_back({row.disease + " placeholder " + std::to_string(out.size()), static_cast<HealthLabel>(l),
                       row.disease});
      }
    }
  }
  return out;
}

namespace {

constexpr std::array<std::string_view, 10> kDiseaseWords = {
    "alzheimers", "cancer", "a cough", "depression", "a fever", "a headache", "a heart attack", "a migraine",
    "parkinsons", "a stroke"};

constexpr std::array<std::string_view, 10> kRelatives = {"mum",     "dad",  "sister", "brother",  "grandma",
                                                         "grandad", "wife", "son",    "daughter", "uncle"};
constexpr std::array<std::string_view, 8> kWhen = {"last week", "yesterday", "this morning", "on friday",
                                                   "last year", "this month", "overnight",   "since sunday"};
constexpr std::array<std::string_view, 10> kThings = {"monday", "this homework", "the traffic", "my boss",
                                                      "the group chat", "exam week", "this playlist",
                                                      "the new update", "my ex", "this queue"};
constexpr std::array<std::string_view, 8> kPlaces = {"london", "texas", "sydney", "toronto",
                                                     "dublin", "ohio",  "kenya",  "manila"};

constexpr std::array<std::string_view, 7> kHealthTemplates = {
    "my {rel} was diagnosed with {d} {when}",
    "my {rel} has had {d} {when} and the doctor wants more tests",
    "stuck at home with {d} {when} feeling awful",
    "my {rel} is in hospital with {d} {when}",
    "woke up with {d} {when} so calling in sick",
    "my {rel} started treatment for {d} {when}",
    "the nurse says my {rel} should rest until {d} eases",
};
constexpr std::array<std::string_view, 7> kFigurativeTemplates = {
    "{thing} is giving me {d} lol",
    "honestly {thing} is worse than {d}",
    "{thing} nearly gave me {d} haha",
    "ugh {thing} is pure {d} today",
    "watching {thing} is like {d} i swear",
    "{thing} again, it is {d} in human form",
    "{thing} is {d} for the soul",
};
constexpr std::array<std::string_view, 7> kNonHealthTemplates = {
    "new study on {d} published by researchers in {place}",
    "charity walk for {d} awareness in {place} {when}",
    "documentary about {d} airs on channel four {when}",
    "scientists in {place} announce {d} trial results",
    "fundraiser for {d} research raised thousands in {place}",
    "the {d} foundation opens an office in {place}",
    "article explains the history of {d} statistics",
};

template <std::size_t N>
std::string_view pick_from(const std::array<std::string_view, N>& items, Rng& rng) {
  return items[static_cast<std::size_t>(rng.below(N))];
}

void replace_all(std::string& text, std::string_view key, std::string_view value) {
  for (std::size_t pos = text.find(key); pos != std::string::npos; pos = text.find(key, pos + value.size())) {
    text.replace(pos, key.size(), value);
  }
}

std::string hashtag(std::string_view tag) {
  std::string out = "#";
  for (char c : tag) {
    if (c != '_') out += c;
  }
  return out;
}

}  // namespace

std::vector<Example> synthesize_corpus(std::size_t n, std::uint64_t seed, const EmojiTable& emojis,
                                       const SynthOptions& options) {
  if (n < 2) throw ConfigError("synthesize_corpus: n must be at least 2");
  constexpr double kTotal = 15742.0;
  const auto health = static_cast<std::size_t>(std::llround(static_cast<double>(n) * 4228.0 / kTotal));
  const auto figurative = static_cast<std::size_t>(std::llround(static_cast<double>(n) * 4192.0 / kTotal));

  Rng rng(seed);
  std::vector<HealthLabel> labels;
  labels.insert(labels.end(), health, HealthLabel::health_mention);
  labels.insert(labels.end(), figurative, HealthLabel::figurative_mention);
  labels.insert(labels.end(), n - health - figurative, HealthLabel::non_health_mention);
  rng.shuffle(std::span(labels));

  std::vector<std::string> emoji_keys;
  for (const auto& [key, name] : emojis.entries()) emoji_keys.push_back(key);

  std::vector<Example> out;
  out.reserve(n);
  for (HealthLabel label : labels) {
    const auto l = static_cast<std::size_t>(label);
    std::size_t column_total = 0;
    for (const auto& row : kPhm2017) column_total += row[l];
    auto draw = static_cast<std::size_t>(rng.below(column_total));
    std::size_t d = 0;
    while (draw >= kPhm2017[d][l]) draw -= kPhm2017[d++][l];

    std::string text(label == HealthLabel::health_mention       ? pick_from(kHealthTemplates, rng)
                     : label == HealthLabel::figurative_mention ? pick_from(kFigurativeTemplates, rng)
                                                                : pick_from(kNonHealthTemplates, rng));
    replace_all(text, "{d}", kDiseaseWords[d]);
    replace_all(text, "{rel}", pick_from(kRelatives, rng));
    replace_all(text, "{when}", pick_from(kWhen, rng));
    replace_all(text, "{thing}", pick_from(kThings, rng));
    replace_all(text, "{place}", pick_from(kPlaces, rng));

    if (rng.bernoulli(options.mention_prob)) text = "@user" + std::to_string(rng.below(1000)) + " " + text;
    if (rng.bernoulli(options.hashtag_prob)) text += " " + hashtag(kDiseases[d]);
    if (!emoji_keys.empty() && rng.bernoulli(options.emoji_prob)) {
      text += " " + emoji_keys[static_cast<std::size_t>(rng.below(emoji_keys.size()))];
    }
    if (rng.bernoulli(options.url_prob)) text += " https://t.co/x" + std::to_string(rng.below(100000));
    out.push_back({std::move(text), label, std::string(kDiseases[d])});
  }
  return out;
}

}  // namespace cadv
