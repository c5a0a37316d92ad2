#pragma once

// Tweet normalization and word-level tokenization.

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace cadv {

// Emoji (UTF-8 codepoint sequence) -> lowercase underscore-joined name.
class EmojiTable {
 public:
  EmojiTable() = default;

  // Parses "emoji<TAB>name" lines. Blank lines are skipped; duplicate keys and
  // names outside [a-z0-9_]+ throw InputError.
  static EmojiTable parse(std::string_view tsv);
  static EmojiTable load(const std::filesystem::path& path);
  // The table shipped in data/emoji_table.tsv, compiled in.
  static const EmojiTable& builtin();

  void insert(std::string emoji, std::string name);
  // Longest key that prefixes `text`; returns its byte length, 0 if none.
  std::size_t match(std::string_view text, const std::string** name) const;

  std::size_t size() const { return names_.size(); }
  const std::map<std::string, std::string>& entries() const { return names_; }

 private:
  std::map<std::string, std::string> names_;
  std::size_t max_key_bytes_ = 0;
};

// Replaces each known emoji by its name, padded with one space on each side
// unless whitespace or a string boundary is already there. Codepoints in the
// emoji blocks that are not in the table are dropped. Everything else is kept.
std::string transliterate_emojis(std::string_view text, const EmojiTable& table);

// Drops @mentions and URLs (http://, https://, www.), strips the leading '#'
// from hashtags, lowercases, removes characters outside [a-z0-9_'], and joins
// the surviving words with single spaces.
std::string strip_entities(std::string_view text);

// transliterate_emojis followed by strip_entities.
std::string preprocess(std::string_view text, const EmojiTable& table);

std::vector<std::string> split_words(std::string_view text);

inline constexpr int kPadId = 0;
inline constexpr int kUnkId = 1;
inline constexpr int kClsId = 2;
inline constexpr int kSepId = 3;
inline constexpr std::string_view kPadToken = "[PAD]";
inline constexpr std::string_view kUnkToken = "[UNK]";
inline constexpr std::string_view kClsToken = "[CLS]";
inline constexpr std::string_view kSepToken = "[SEP]";

class Vocab {
 public:
  // Only the four reserved tokens.
  Vocab();

  // Tokens with count >= min_count after the reserved ids, ordered by
  // descending count then lexicographically. Empty corpus throws InputError.
  static Vocab build(const std::vector<std::string>& corpus, std::size_t min_count = 1);
  // One token per line; line number is the id.
  static Vocab load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
  static Vocab from_tokens(std::vector<std::string> tokens);

  int id(std::string_view token) const;  // kUnkId when absent
  const std::string& token(int id) const;
  bool contains(std::string_view token) const;
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

struct TokenizedExample {
  std::vector<int> ids;    // exactly max_len entries
  int attention_len = 0;   // non-PAD positions, including [CLS] and [SEP]
  int label = 0;
  std::string disease;
};

// [CLS] + first (max_len - 2) words + [SEP], PAD-filled to max_len.
TokenizedExample encode(std::string_view text, const Vocab& vocab, std::size_t max_len);

}  // namespace cadv
