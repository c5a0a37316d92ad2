#include "cadv/textprep.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "cadv/error.hpp"

namespace cadv {

namespace detail {
extern const char* const kBuiltinEmojiTable;
}

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

// Decodes one UTF-8 codepoint at text[pos]; returns its byte length (1 for
// invalid bytes, which are passed through untouched).
std::size_t decode_utf8(std::string_view text, std::size_t pos, char32_t* cp) {
  const auto b0 = static_cast<unsigned char>(text[pos]);
  std::size_t len = 1;
  char32_t value = b0;
  if (b0 >= 0xF0 && b0 < 0xF8) {
    len = 4;
    value = b0 & 0x07;
  } else if (b0 >= 0xE0) {
    len = b0 < 0xF0 ? 3 : 1;
    value = b0 & 0x0F;
  } else if (b0 >= 0xC0) {
    len = 2;
    value = b0 & 0x1F;
  }
  if (len == 1 || pos + len > text.size()) {
    *cp = b0;
    return 1;
  }
  for (std::size_t i = 1; i < len; ++i) {
    const auto b = static_cast<unsigned char>(text[pos + i]);
    if ((b & 0xC0) != 0x80) {
      *cp = b0;
      return 1;
    }
    value = (value << 6) | (b & 0x3F);
  }
  *cp = value;
  return len;
}

bool is_emoji_codepoint(char32_t cp) {
  return (cp >= 0x1F000 && cp <= 0x1FAFF) || (cp >= 0x2600 && cp <= 0x27BF) || (cp >= 0x2300 && cp <= 0x23FF) ||
         (cp >= 0x2B00 && cp <= 0x2BFF) || (cp >= 0xFE00 && cp <= 0xFE0F) || cp == 0x200D ||
         (cp >= 0xE0020 && cp <= 0xE007F);
}

bool valid_name(std::string_view name) {
  return !name.empty() && std::all_of(name.begin(), name.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
  });
}

bool keep_char(char c) { return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '\''; }

}  // namespace

EmojiTable EmojiTable::parse(std::string_view tsv) {
  EmojiTable table;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= tsv.size()) {
    std::size_t end = tsv.find('\n', pos);
    if (end == std::string_view::npos) end = tsv.size();
    std::string_view line = tsv.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos || tab == 0) {
      throw InputError("emoji table line " + std::to_string(line_no) + ": expected emoji<TAB>name");
    }
    std::string name(line.substr(tab + 1));
    if (!valid_name(name)) {
      throw InputError("emoji table line " + std::to_string(line_no) + ": invalid name '" + name + "'");
    }
    std::string key(line.substr(0, tab));
    if (table.names_.count(key)) {
      throw InputError("emoji table line " + std::to_string(line_no) + ": duplicate emoji for '" + name + "'");
    }
    table.insert(std::move(key), std::move(name));
  }
  return table;
}

EmojiTable EmojiTable::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read emoji table " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

const EmojiTable& EmojiTable::builtin() {
  static const EmojiTable table = parse(detail::kBuiltinEmojiTable);
  return table;
}

void EmojiTable::insert(std::string emoji, std::string name) {
  max_key_bytes_ = std::max(max_key_bytes_, emoji.size());
  names_[std::move(emoji)] = std::move(name);
}

std::size_t EmojiTable::match(std::string_view text, const std::string** name) const {
  for (std::size_t len = std::min(max_key_bytes_, text.size()); len > 0; --len) {
    auto it = names_.find(std::string(text.substr(0, len)));
    if (it != names_.end()) {
      *name = &it->second;
      return len;
    }
  }
  return 0;
}

std::string transliterate_emojis(std::string_view text, const EmojiTable& table) {
  std::string out;
  out.reserve(text.size() + 16);
  std::size_t pos = 0;
  while (pos < text.size()) {
    if (static_cast<unsigned char>(text[pos]) < 0x80) {
      out.push_back(text[pos++]);
      continue;
    }
    const std::string* name = nullptr;
    if (const std::size_t len = table.match(text.substr(pos), &name)) {
      if (!out.empty() && !is_space(out.back())) out.push_back(' ');
      out += *name;
      pos += len;
      if (pos < text.size() && !is_space(text[pos])) out.push_back(' ');
      continue;
    }
    char32_t cp = 0;
    const std::size_t len = decode_utf8(text, pos, &cp);
    if (!is_emoji_codepoint(cp)) out.append(text.substr(pos, len));
    pos += len;
  }
  return out;
}

std::string strip_entities(std::string_view text) {
  std::string out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() && is_space(text[pos])) ++pos;
    std::size_t end = pos;
    while (end < text.size() && !is_space(text[end])) ++end;
    if (end == pos) break;

    std::string word(text.substr(pos, end - pos));
    pos = end;
    std::transform(word.begin(), word.end(), word.begin(),
                   [](char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); });
    if (word.starts_with('@') || word.starts_with("http://") || word.starts_with("https://") ||
        word.starts_with("www.")) {
      continue;
    }
    std::string kept;
    for (char c : word) {
      if (keep_char(c)) kept.push_back(c);
    }
    if (kept.empty()) continue;
    if (!out.empty()) out.push_back(' ');
    out += kept;
  }
  return out;
}

std::string preprocess(std::string_view text, const EmojiTable& table) {
  return strip_entities(transliterate_emojis(text, table));
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() && is_space(text[pos])) ++pos;
    std::size_t end = pos;
    while (end < text.size() && !is_space(text[end])) ++end;
    if (end > pos) words.emplace_back(text.substr(pos, end - pos));
    pos = end;
  }
  return words;
}

Vocab::Vocab()
    : tokens_{std::string(kPadToken), std::string(kUnkToken), std::string(kClsToken), std::string(kSepToken)} {
  for (int i = 0; i < 4; ++i) ids_[tokens_[static_cast<std::size_t>(i)]] = i;
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens) {
  Vocab v;
  for (auto& t : tokens) {
    if (v.ids_.count(t)) {
      throw InputError("vocabulary token '" + t + "' appears twice");
    }
    v.ids_[t] = static_cast<int>(v.tokens_.size());
    v.tokens_.push_back(std::move(t));
  }
  return v;
}

Vocab Vocab::build(const std::vector<std::string>& corpus, std::size_t min_count) {
  if (corpus.empty()) throw InputError("build_vocab: empty corpus");
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& doc : corpus)
    for (auto& w : split_words(doc)) ++counts[w];
  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (auto& [w, c] : counts) {
    if (c >= min_count) ranked.emplace_back(w, c);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::vector<std::string> tokens;
  tokens.reserve(ranked.size());
  for (auto& [w, c] : ranked) tokens.push_back(w);
  return from_tokens(std::move(tokens));
}

Vocab Vocab::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read vocabulary " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  const std::string_view reserved[] = {kPadToken, kUnkToken, kClsToken, kSepToken};
  if (lines.size() < 4) throw InputError("vocabulary " + path.string() + " lacks the reserved tokens");
  for (std::size_t i = 0; i < 4; ++i) {
    if (lines[i] != reserved[i]) {
      throw InputError("vocabulary line " + std::to_string(i + 1) + " must be " + std::string(reserved[i]));
    }
  }
  return from_tokens({lines.begin() + 4, lines.end()});
}

void Vocab::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write vocabulary " + path.string());
  for (const auto& t : tokens_) out << t << '\n';
}

int Vocab::id(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnkId : it->second;
}

const std::string& Vocab::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw InputError("token id " + std::to_string(id) + " outside vocabulary of size " +
                     std::to_string(tokens_.size()));
  }
  return tokens_[static_cast<std::size_t>(id)];
}

bool Vocab::contains(std::string_view token) const { return ids_.count(std::string(token)) > 0; }

TokenizedExample encode(std::string_view text, const Vocab& vocab, std::size_t max_len) {
  if (max_len < 3) throw ConfigError("encode: max_len must be at least 3");
  TokenizedExample ex;
  ex.ids.assign(max_len, kPadId);
  ex.ids[0] = kClsId;
  std::size_t pos = 1;
  for (const auto& w : split_words(text)) {
    if (pos == max_len - 1) break;
    ex.ids[pos++] = vocab.id(w);
  }
  ex.ids[pos++] = kSepId;
  ex.attention_len = static_cast<int>(pos);
  return ex;
}

}  // namespace cadv
