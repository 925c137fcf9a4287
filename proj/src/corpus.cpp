#include "collatio/corpus.hpp"

#include <algorithm>

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include "collatio/error.hpp"

namespace collatio {

std::string to_string(const LineId& id) { return id.edition + ":" + std::to_string(id.index); }

const Line& Edition::line(std::size_t index) const {
  if (index >= lines.size())
    throw NotFoundError("edition '" + edition_id + "' has no line " + std::to_string(index));
  return lines[index];
}

TokenId Vocabulary::add(const std::string& form) {
  auto it = index_.find(form);
  if (it != index_.end()) {
    ++freq_[it->second];
    return it->second;
  }
  auto id = static_cast<TokenId>(forms_.size());
  index_.emplace(form, id);
  forms_.push_back(form);
  freq_.push_back(1);
  return id;
}

bool Vocabulary::contains(std::string_view form) const { return index_.find(form) != index_.end(); }

TokenId Vocabulary::id(std::string_view form) const {
  auto it = index_.find(form);
  if (it == index_.end()) throw NotFoundError("unknown token '" + std::string(form) + "'");
  return it->second;
}

const std::string& Vocabulary::form(TokenId id) const {
  if (id >= forms_.size()) throw NotFoundError("unknown token id " + std::to_string(id));
  return forms_[id];
}

std::uint64_t Vocabulary::frequency(TokenId id) const {
  if (id >= freq_.size()) throw NotFoundError("unknown token id " + std::to_string(id));
  return freq_[id];
}

Vocabulary Vocabulary::from_parts(std::vector<std::string> forms, std::vector<std::uint64_t> freq) {
  if (forms.size() != freq.size()) throw ValidationError("vocabulary forms/frequencies size mismatch");
  Vocabulary v;
  for (std::size_t i = 0; i < forms.size(); ++i) {
    if (!v.index_.emplace(forms[i], static_cast<TokenId>(i)).second)
      throw ValidationError("duplicate vocabulary entry '" + forms[i] + "'");
  }
  v.forms_ = std::move(forms);
  v.freq_ = std::move(freq);
  return v;
}

namespace {

bool strippable(UChar32 c) {
  return u_ispunct(c) || u_isUWhiteSpace(c) || u_charType(c) == U_FORMAT_CHAR;
}

const icu::Normalizer2& nfc() {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* n = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw std::runtime_error("ICU NFC normalizer unavailable");
  return *n;
}

icu::UnicodeString to_nfc(const icu::UnicodeString& s) {
  UErrorCode status = U_ZERO_ERROR;
  icu::UnicodeString out = nfc().normalize(s, status);
  if (U_FAILURE(status)) throw std::runtime_error("NFC normalization failed");
  return out;
}

}  // namespace

std::string normalize_token(std::string_view raw) {
  icu::UnicodeString s = icu::UnicodeString::fromUTF8(icu::StringPiece(raw.data(), static_cast<int32_t>(raw.size())));
  s.toLower(icu::Locale::getRoot());
  s = to_nfc(s);

  int32_t begin = 0;
  int32_t end = s.length();
  while (begin < end) {
    UChar32 c = s.char32At(begin);
    if (!strippable(c)) break;
    begin += U16_LENGTH(c);
  }
  while (end > begin) {
    int32_t prev = s.moveIndex32(end, -1);
    if (!strippable(s.char32At(prev))) break;
    end = prev;
  }
  if (begin >= end) return {};

  icu::UnicodeString trimmed = to_nfc(s.tempSubStringBetween(begin, end));
  std::string out;
  trimmed.toUTF8String(out);
  return out;
}

std::vector<std::string> tokenize(std::string_view line) {
  std::vector<std::string> out;
  const auto* bytes = reinterpret_cast<const uint8_t*>(line.data());
  const auto length = static_cast<int32_t>(line.size());
  int32_t i = 0;
  int32_t start = 0;
  auto flush = [&](int32_t stop) {
    if (stop > start) {
      std::string form = normalize_token(line.substr(start, stop - start));
      if (!form.empty()) out.push_back(std::move(form));
    }
  };
  while (i < length) {
    int32_t here = i;
    UChar32 c;
    U8_NEXT(bytes, i, length, c);
    if (c >= 0 && u_isUWhiteSpace(c)) {
      flush(here);
      start = i;
    }
  }
  flush(length);
  return out;
}

Edition ingest_edition(std::string_view source_text, const std::string& edition_id, Vocabulary& vocab,
                       const std::string& title) {
  if (edition_id.empty()) throw ValidationError("edition id must be non-empty");

  Edition edition;
  edition.edition_id = edition_id;
  edition.title = title.empty() ? edition_id : title;

  std::size_t pos = 0;
  while (pos < source_text.size()) {
    std::size_t nl = source_text.find('\n', pos);
    std::string_view physical =
        source_text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? source_text.size() : nl + 1;
    if (!physical.empty() && physical.back() == '\r') physical.remove_suffix(1);

    std::vector<std::string> forms = tokenize(physical);
    if (forms.empty()) continue;

    Line line;
    line.id = {edition_id, edition.lines.size()};
    line.raw = std::string(physical);
    line.tokens.reserve(forms.size());
    for (const auto& f : forms) line.tokens.push_back(vocab.add(f));
    line.forms = std::move(forms);
    edition.lines.push_back(std::move(line));
  }
  if (edition.lines.empty()) throw ValidationError("edition '" + edition_id + "' has no non-empty lines");
  return edition;
}

Vocabulary build_vocabulary(const std::vector<Edition>& editions) {
  if (editions.empty()) throw ValidationError("cannot build a vocabulary from zero editions");
  std::map<std::string, std::uint64_t> counts;
  for (const auto& e : editions)
    for (const auto& l : e.lines)
      for (const auto& f : l.forms) ++counts[f];

  std::vector<std::pair<std::string, std::uint64_t>> sorted(counts.begin(), counts.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const auto& x, const auto& y) { return x.second > y.second; });

  std::vector<std::string> forms;
  std::vector<std::uint64_t> freq;
  forms.reserve(sorted.size());
  freq.reserve(sorted.size());
  for (auto& [f, n] : sorted) {
    forms.push_back(f);
    freq.push_back(n);
  }
  return Vocabulary::from_parts(std::move(forms), std::move(freq));
}

const Edition& Corpus::ingest(std::string_view source_text, const std::string& edition_id,
                              const std::string& title) {
  if (has_edition(edition_id)) throw ValidationError("edition '" + edition_id + "' already ingested");
  Vocabulary scratch = vocab_;
  editions_.push_back(ingest_edition(source_text, edition_id, scratch, title));
  renumber();
  return editions_.back();
}

Corpus Corpus::from_editions(std::vector<Edition> editions) {
  Corpus c;
  for (const auto& e : editions) {
    if (e.edition_id.empty()) throw ValidationError("edition id must be non-empty");
    for (const auto& other : c.editions_)
      if (other.edition_id == e.edition_id) throw ValidationError("duplicate edition '" + e.edition_id + "'");
    c.editions_.push_back(e);
  }
  if (!c.editions_.empty()) c.renumber();
  return c;
}

void Corpus::renumber() {
  vocab_ = build_vocabulary(editions_);
  for (auto& e : editions_)
    for (auto& l : e.lines) {
      l.tokens.clear();
      for (const auto& f : l.forms) l.tokens.push_back(vocab_.id(f));
    }
}

const Edition& Corpus::edition(std::string_view edition_id) const {
  for (const auto& e : editions_)
    if (e.edition_id == edition_id) return e;
  throw NotFoundError("unknown edition '" + std::string(edition_id) + "'");
}

bool Corpus::has_edition(std::string_view edition_id) const {
  return std::any_of(editions_.begin(), editions_.end(),
                     [&](const Edition& e) { return e.edition_id == edition_id; });
}

const Line& Corpus::line(const LineId& id) const { return edition(id.edition).line(id.index); }

}  // namespace collatio
