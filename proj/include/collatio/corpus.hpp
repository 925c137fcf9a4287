#pragma once

#include <cstddef>
#include <cstdint>
#include <compare>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace collatio {

using TokenId = std::uint32_t;

struct LineId {
  std::string edition;
  std::size_t index = 0;

  auto operator<=>(const LineId&) const = default;
  bool operator==(const LineId&) const = default;
};

std::string to_string(const LineId& id);

struct Line {
  LineId id;
  std::string raw;                  // source bytes without the line terminator
  std::vector<std::string> forms;   // normalized surface forms, one per token
  std::vector<TokenId> tokens;

  std::size_t size() const { return tokens.size(); }
};

struct Edition {
  std::string edition_id;
  std::string title;
  std::vector<Line> lines;

  const Line& line(std::size_t index) const;
};

// Dense bijection between normalized forms and ids 0..V-1.
class Vocabulary {
 public:
  Vocabulary() = default;

  // Returns the id of `form`, appending it when unseen, and counts one occurrence.
  TokenId add(const std::string& form);

  bool contains(std::string_view form) const;
  TokenId id(std::string_view form) const;
  const std::string& form(TokenId id) const;
  std::uint64_t frequency(TokenId id) const;
  std::size_t size() const { return forms_.size(); }

  const std::vector<std::string>& forms() const { return forms_; }
  const std::vector<std::uint64_t>& frequencies() const { return freq_; }

  static Vocabulary from_parts(std::vector<std::string> forms, std::vector<std::uint64_t> freq);

  bool operator==(const Vocabulary& other) const {
    return forms_ == other.forms_ && freq_ == other.freq_;
  }

 private:
  std::map<std::string, TokenId, std::less<>> index_;
  std::vector<std::string> forms_;
  std::vector<std::uint64_t> freq_;
};

// Lowercase, NFC, strip punctuation from both ends. Empty when nothing remains.
std::string normalize_token(std::string_view raw);

// Whitespace split followed by normalize_token, dropping empty results.
std::vector<std::string> tokenize(std::string_view line);

// One Line per physical line that keeps at least one token. Token ids are
// assigned through `vocab`, which is extended in place.
Edition ingest_edition(std::string_view source_text, const std::string& edition_id,
                       Vocabulary& vocab, const std::string& title = {});

// Canonical numbering: descending frequency, then lexicographic form.
Vocabulary build_vocabulary(const std::vector<Edition>& editions);

// A set of editions sharing one canonical vocabulary.
class Corpus {
 public:
  const Edition& ingest(std::string_view source_text, const std::string& edition_id,
                        const std::string& title = {});

  // Restores a corpus from already tokenized editions (forms are authoritative).
  static Corpus from_editions(std::vector<Edition> editions);

  const std::vector<Edition>& editions() const { return editions_; }
  const Edition& edition(std::string_view edition_id) const;
  bool has_edition(std::string_view edition_id) const;
  const Line& line(const LineId& id) const;
  const Vocabulary& vocabulary() const { return vocab_; }
  bool empty() const { return editions_.empty(); }

 private:
  void renumber();

  std::vector<Edition> editions_;
  Vocabulary vocab_;
};

}  // namespace collatio
