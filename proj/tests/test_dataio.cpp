#include <doctest.h>

#include <algorithm>
#include <map>
#include <sstream>

#include "cadv/dataio.hpp"
#include "cadv/error.hpp"
#include "cadv/textprep.hpp"

using namespace cadv;

namespace {

std::vector<std::size_t> joined(const Split& s) {
  std::vector<std::size_t> all = s.train;
  all.insert(all.end(), s.val.begin(), s.val.end());
  all.insert(all.end(), s.test.begin(), s.test.end());
  std::sort(all.begin(), all.end());
  return all;
}

}  // namespace

TEST_CASE("corpus reading") {
  SUBCASE("empty input") {
    std::istringstream in("");
    const auto r = read_corpus(in);
    CHECK(r.examples.empty());
    CHECK(r.malformed.empty());
  }
  SUBCASE("a single record") {
    std::istringstream in(R"({"text":"my mum has the flu","label":"health_mention","disease":"fever"})" "\n");
    const auto r = read_corpus(in);
    REQUIRE(r.examples.size() == 1);
    CHECK(r.examples[0].text == "my mum has the flu");
    CHECK(r.examples[0].label == HealthLabel::health_mention);
    CHECK(r.examples[0].disease == "fever");
  }
  SUBCASE("an unknown label is reported with its line number") {
    std::ostringstream text;
    for (int i = 0; i < 12; ++i) {
      text << R"({"text":"t)" << i << R"(","label":")" << (i == 10 ? "sneeze" : "figurative_mention")
           << R"(","disease":"stroke"})" << '\n';
    }
    std::istringstream in(text.str());
    const auto r = read_corpus(in);
    CHECK(r.examples.size() == 11);
    REQUIRE(r.malformed.size() == 1);
    CHECK(r.malformed[0].line == 11);
  }
  SUBCASE("too many malformed lines abort") {
    std::istringstream in(R"({"text":"a","label":"health_mention","disease":"cough"})" "\nnot json\n");
    CHECK_THROWS_AS(read_corpus(in), InputError);
  }
  SUBCASE("missing file") { CHECK_THROWS_AS(load_corpus("/nonexistent/corpus.jsonl"), IoError); }
}

TEST_CASE("corpus write and read are byte-identical") {
  const std::vector<Example> examples = {
      {"line one\nline \"two\"", HealthLabel::figurative_mention, "migraine"},
      {"caf\xC3\xA9 \xF0\x9F\x98\xB7", HealthLabel::health_mention, "cough"},
  };
  std::ostringstream first;
  write_corpus(first, examples);
  const std::string text = first.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 2);
  std::istringstream in(text);
  const auto back = read_corpus(in);
  REQUIRE(back.examples.size() == 2);
  CHECK(back.examples[0].text == examples[0].text);
  std::ostringstream second;
  write_corpus(second, back.examples);
  CHECK(second.str() == first.str());
}

TEST_CASE("label mapping") {
  CHECK(label_map(HealthLabel::health_mention, LabelScheme::binary) == 1);
  CHECK(label_map(HealthLabel::non_health_mention, LabelScheme::binary) == 0);
  CHECK(label_map(HealthLabel::figurative_mention, LabelScheme::binary) == 0);
  CHECK(label_map(HealthLabel::figurative_mention, LabelScheme::three_class) == 2);
  CHECK(class_count(LabelScheme::binary) == 2);
  CHECK(class_count(LabelScheme::three_class) == 3);
  CHECK(parse_health_label("non_health_mention") == HealthLabel::non_health_mention);
  CHECK_FALSE(parse_health_label("Health_Mention").has_value());
  CHECK(disease_display_name("heart_attack") == "Heart attack");
  CHECK(disease_display_name("alzheimers") == "Alzheimer's");
}

TEST_CASE("stratified split sizes") {
  SUBCASE("full collection") {
    const auto examples = expand_counts(phm2017_counts());
    REQUIRE(examples.size() == 15742);
    const auto s = stratified_split(examples, SplitSpec{});
    CHECK(s.train.size() == 10232);
    CHECK(s.val.size() == 2361);
    CHECK(s.test.size() == 3149);
    const auto all = joined(s);
    for (std::size_t i = 0; i < all.size(); ++i) REQUIRE(all[i] == i);

    // Each label × disease stratum is within one example of its exact share.
    std::map<std::string, std::array<double, 4>> per;
    auto key = [&](std::size_t i) { return to_string(examples[i].label) + "|" + examples[i].disease; };
    for (std::size_t i = 0; i < examples.size(); ++i) per[key(i)][3] += 1;
    for (std::size_t i : s.train) per[key(i)][0] += 1;
    for (std::size_t i : s.val) per[key(i)][1] += 1;
    for (std::size_t i : s.test) per[key(i)][2] += 1;
    for (const auto& [k, c] : per) {
      INFO(k);
      CHECK(std::abs(c[0] - 0.65 * c[3]) <= 1.0);
      CHECK(std::abs(c[1] - 0.15 * c[3]) <= 1.0);
      CHECK(std::abs(c[2] - 0.20 * c[3]) <= 1.0 + 1e-9);
    }
  }
  SUBCASE("one stratum of 100") {
    const std::vector<std::string> strata(100, "x");
    const auto s = stratified_split(strata, SplitSpec{});
    CHECK(s.train.size() == 65);
    CHECK(s.val.size() == 15);
    CHECK(s.test.size() == 20);
  }
  SUBCASE("seed changes membership but not sizes") {
    const std::vector<std::string> strata(100, "x");
    SplitSpec other;
    other.seed = 7;
    const auto a = stratified_split(strata, SplitSpec{});
    const auto b = stratified_split(strata, other);
    CHECK(a.train.size() == b.train.size());
    CHECK(a.train != b.train);
    CHECK(stratified_split(strata, SplitSpec{}).train == a.train);
  }
  SUBCASE("bad inputs") {
    CHECK_THROWS_AS(stratified_split(std::vector<std::string>{}, SplitSpec{}), InputError);
    SplitSpec bad;
    bad.train = 0.9;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
  }
}

TEST_CASE("synthetic corpus") {
  const auto& emojis = EmojiTable::builtin();
  const auto a = synthesize_corpus(1000, 11, emojis);
  const auto b = synthesize_corpus(1000, 11, emojis);
  REQUIRE(a.size() == 1000);
  std::ostringstream wa, wb;
  write_corpus(wa, a);
  write_corpus(wb, b);
  CHECK(wa.str() == wb.str());

  std::size_t positive = 0;
  for (const auto& ex : a) {
    positive += label_map(ex.label, LabelScheme::binary) == 1 ? 1 : 0;
    CHECK(is_known_disease(ex.disease));
    CHECK_FALSE(preprocess(ex.text, emojis).empty());
  }
  CHECK(static_cast<double>(positive) / 1000.0 == doctest::Approx(0.27).epsilon(0.03 / 0.27));
  CHECK_THROWS_AS(synthesize_corpus(1, 1, emojis), ConfigError);
}

TEST_CASE("dataset statistics") {
  const auto phm = phm2017_counts();
  CHECK(phm.total() == 15742);
  CHECK(phm.totals() == std::array<std::size_t, 3>{4228, 7322, 4192});
  CHECK(phm.rows.size() == 10);

  const auto empty = dataset_stats(std::span<const Example>{});
  CHECK(empty.rows.size() == 10);
  CHECK(empty.total() == 0);

  const auto counted = dataset_stats(expand_counts(phm));
  CHECK(format_counts(counted) == format_counts(phm));
  std::size_t sum = 0;
  for (const auto& row : counted.rows) sum += row.total();
  CHECK(sum == counted.total());

  CHECK(format_counts(parse_counts(format_counts(phm))) == format_counts(phm));
  CHECK(format_counts(load_counts(std::string(CADV_SOURCE_DIR) + "/data/phm2017_counts.tsv")) == format_counts(phm));
  CHECK_THROWS_AS(parse_counts("disease\th\tn\tf\ncough\t1\t2\n"), InputError);

  const std::string table = format_stats(phm);
  CHECK(table.find("Heart attack") != std::string::npos);
  CHECK(table.find("15742") != std::string::npos);
  CHECK(table.rfind("Total", 0) == std::string::npos);
}
