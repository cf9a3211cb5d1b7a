#pragma once

// Deterministic text normalization: ASCII-emoticon mapping, elongation
// compression, COVID-term unification, pluggable word segmentation, and
// raw-text count statistics. No spelling correction anywhere: misspelled
// forms carry signal and are preserved verbatim.

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "reintel/common.hpp"

namespace reintel {

// ---- emoticons ----

struct EmoticonMap {
  // emoticon -> sentiment token, longest-match-first at apply time
  std::map<std::string, std::string> entries;

  // Keys must be non-empty and no token may contain a mapped emoticon,
  // which is what makes the mapping idempotent.
  void validate() const {
    for (const auto& [emo, token] : entries) {
      if (emo.empty()) throw Error("emoticon map: empty emoticon key");
      for (const auto& [other, _] : entries)
        if (token.find(other) != std::string::npos)
          throw Error("emoticon map: token '" + token + "' contains emoticon '" +
                      other + "'");
    }
  }
};

// Happy/sad tokens default to the Vietnamese sentiment words; tests and
// configs can substitute any strings.
inline EmoticonMap default_emoticon_map(const std::string& happy_token = "vui",
                                        const std::string& sad_token = "buồn") {
  static const char* happy[] = {":)",  ":-)", ":d",  ":D",  ":-D", ";)",  ";-)",
                                "=)",  "=]",  "=]]", ":]",  ":}",  ":>",  ";d",
                                ";D",  "^^",  "^_^", "xD",  "XD",  ":3",  ":p",
                                ":P",  ":v"};
  static const char* sad[] = {":(",  ":-(", "=(",  "=[",  ":[",  ":'(", ";(",
                              ":{",  ":<",  "={",  "D:",  "T_T", ";_;", ":c",
                              ":-["};
  EmoticonMap m;
  for (const char* e : happy) m.entries[e] = happy_token;
  for (const char* e : sad) m.entries[e] = sad_token;
  m.validate();
  return m;
}

// Lexicon file: one `emoticon<TAB>happy|sad` line per entry, UTF-8.
inline EmoticonMap load_emoticon_lexicon(const std::string& path,
                                         const std::string& happy_token = "vui",
                                         const std::string& sad_token = "buồn") {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open emoticon lexicon: " + path);
  EmoticonMap m;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw Error("lexicon " + path + " line " + std::to_string(n) +
                  ": expected emoticon<TAB>label");
    std::string emo = line.substr(0, tab);
    std::string label = trim(line.substr(tab + 1));
    if (label == "happy") m.entries[emo] = happy_token;
    else if (label == "sad") m.entries[emo] = sad_token;
    else
      throw Error("lexicon " + path + " line " + std::to_string(n) +
                  ": label must be happy or sad, got '" + label + "'");
  }
  m.validate();
  return m;
}

namespace detail {
// A word character for boundary checks: ASCII alphanumerics, underscore, or
// any non-ASCII byte (Vietnamese letters must not be split).
inline bool is_word_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9') || c == '_' || c >= 0x80;
}
}  // namespace detail

// Replaces every maximal emoticon occurrence by its token, longest match
// first, inserting a space on either side when the neighbour is not already
// whitespace. Emoticon edges that are themselves letters ("xD", "T_T") only
// match against a word boundary, so words like ":covid" stay intact.
inline std::string normalize_emoticons(std::string_view text, const EmoticonMap& map) {
  if (map.entries.empty()) return std::string(text);
  std::vector<const std::pair<const std::string, std::string>*> by_len;
  by_len.reserve(map.entries.size());
  for (const auto& kv : map.entries) by_len.push_back(&kv);
  std::sort(by_len.begin(), by_len.end(), [](auto* a, auto* b) {
    if (a->first.size() != b->first.size()) return a->first.size() > b->first.size();
    return a->first < b->first;
  });

  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const std::pair<const std::string, std::string>* hit = nullptr;
    for (auto* kv : by_len) {
      const std::string& emo = kv->first;
      if (text.compare(i, emo.size(), emo) != 0) continue;
      if (detail::is_word_byte(static_cast<unsigned char>(emo.front())) && i > 0 &&
          detail::is_word_byte(static_cast<unsigned char>(text[i - 1])))
        continue;
      if (detail::is_word_byte(static_cast<unsigned char>(emo.back())) &&
          i + emo.size() < text.size() &&
          detail::is_word_byte(static_cast<unsigned char>(text[i + emo.size()])))
        continue;
      hit = kv;
      break;
    }
    if (hit) {
      if (!out.empty() && !is_space(out.back())) out += ' ';
      out += hit->second;
      i += hit->first.size();
      if (i < text.size() && !is_space(text[i])) out += ' ';
    } else {
      out += text[i];
      ++i;
    }
  }
  return out;
}

// ---- elongation ----

// Runs of more than max_run identical grapheme clusters are cut to exactly
// max_run ("Coooool" -> "Cool"). Cluster-level so diacritics stay attached.
inline std::string compress_elongation(std::string_view text, int max_run = 2) {
  if (max_run < 1) throw Error("compress_elongation: max_run must be >= 1");
  auto clusters = grapheme_clusters(text);
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < clusters.size()) {
    std::size_t j = i;
    while (j < clusters.size() && clusters[j] == clusters[i]) ++j;
    std::size_t keep = std::min<std::size_t>(j - i, static_cast<std::size_t>(max_run));
    for (std::size_t k = 0; k < keep; ++k) out += clusters[i];
    i = j;
  }
  return out;
}

// ---- COVID-term unification ----

inline std::set<std::string> default_covid_variants() {
  return {"covid", "ncov", "convid", "covid-19", "covid19", "coronavirus",
          "sars-cov-2"};
}

namespace detail {
inline std::string unify_covid_pass(std::string_view text,
                                    const std::vector<std::string>& by_len) {
  const std::string lower = ascii_lower(text);
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const std::string* hit = nullptr;
    if (i == 0 || !is_word_byte(static_cast<unsigned char>(text[i - 1]))) {
      for (const auto& v : by_len) {
        if (lower.compare(i, v.size(), v) != 0) continue;
        std::size_t end = i + v.size();
        if (end < text.size() && is_word_byte(static_cast<unsigned char>(text[end])))
          continue;
        hit = &v;
        break;
      }
    }
    if (hit) {
      out += "covid";
      i += hit->size();
    } else {
      out += text[i];
      ++i;
    }
  }
  return out;
}
}  // namespace detail

// Case-insensitive whole-token replacement of every variant by "covid",
// iterated to a fixpoint: rewriting "ncov-19" yields "covid-19", which is
// itself a variant and must collapse in the same call. Tokens are
// alnum-bounded, so "covidien" is left alone while "ncov," matches.
inline std::string unify_covid_terms(std::string_view text,
                                     const std::set<std::string>& variants =
                                         default_covid_variants()) {
  if (variants.empty()) throw Error("unify_covid_terms: empty variant set");
  if (!variants.count("covid"))
    throw Error("unify_covid_terms: canonical term 'covid' must be a variant");
  std::vector<std::string> by_len(variants.begin(), variants.end());
  for (auto& v : by_len) v = ascii_lower(v);
  std::sort(by_len.begin(), by_len.end(), [](const auto& a, const auto& b) {
    if (a.size() != b.size()) return a.size() > b.size();
    return a < b;
  });

  std::string cur(text);
  for (int pass = 0; pass < 8; ++pass) {
    std::string next = detail::unify_covid_pass(cur, by_len);
    if (next == cur) break;
    cur = std::move(next);
  }
  return cur;
}

// ---- segmentation ----

// Contract: raw string in, tokens joined by a single space out. The default
// is plain whitespace segmentation; Vietnamese word segmenters plug in via
// the line-in/line-out command adapter.
class Segmenter {
 public:
  virtual ~Segmenter() = default;
  virtual std::string segment(const std::string& text) const = 0;
};

class WhitespaceSegmenter final : public Segmenter {
 public:
  std::string segment(const std::string& text) const override {
    return join(split_ws(text), " ");
  }
};

// Pipes one line of text through an external command (`cmd < in > out`) and
// reads one line back. Internal newlines are flattened to spaces first since
// the protocol is line-oriented.
class CommandSegmenter final : public Segmenter {
 public:
  explicit CommandSegmenter(std::string command) : command_(std::move(command)) {}

  std::string segment(const std::string& text) const override {
    std::string one_line = text;
    for (char& c : one_line)
      if (c == '\n' || c == '\r') c = ' ';
    std::string in_path = temp_path("in"), out_path = temp_path("out");
    {
      std::ofstream f(in_path, std::ios::binary);
      f << one_line << "\n";
      if (!f) throw Error("segmenter: cannot write temp input");
    }
    std::string cmdline = command_ + " < " + in_path + " > " + out_path;
    int rc = std::system(cmdline.c_str());
    if (rc != 0) {
      std::remove(in_path.c_str());
      std::remove(out_path.c_str());
      throw Error("segmenter command failed (exit " + std::to_string(rc) + "): " +
                  command_);
    }
    std::ifstream f(out_path, std::ios::binary);
    std::string line;
    std::getline(f, line);
    std::remove(in_path.c_str());
    std::remove(out_path.c_str());
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return join(split_ws(line), " ");
  }

 private:
  static std::string temp_path(const char* tag) {
    static std::atomic<unsigned> counter{0};
    return "/tmp/reintel_seg_" + std::to_string(::getpid()) + "_" +
           std::to_string(counter++) + "_" + tag + ".txt";
  }
  std::string command_;
};

// ---- full pipeline ----

struct PreprocessOptions {
  EmoticonMap emoticons = default_emoticon_map();
  std::set<std::string> covid_variants = default_covid_variants();
  int max_run = 2;
};

// normalize_emoticons -> compress_elongation -> unify_covid_terms -> segment.
// Idempotent; never corrects spelling.
inline std::string preprocess(const std::string& text, const Segmenter& segmenter,
                              const PreprocessOptions& opts = {},
                              const std::string& text_id = "") {
  std::string s = normalize_emoticons(text, opts.emoticons);
  s = compress_elongation(s, opts.max_run);
  s = unify_covid_terms(s, opts.covid_variants);
  try {
    return segmenter.segment(s);
  } catch (const std::exception& e) {
    throw Error("preprocess" + (text_id.empty() ? "" : " [id " + text_id + "]") +
                ": " + e.what());
  }
}

// ---- statistics ----

struct TextStats {
  long n_hashtags = 0;
  long n_urls = 0;
  long n_chars = 0;
  long n_words = 0;
  long n_question_marks = 0;
  long n_exclaim_marks = 0;
};

namespace detail {
inline bool has_prefix_ci(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    char a = s[i], b = prefix[i];
    if (a >= 'A' && a <= 'Z') a = static_cast<char>(a - 'A' + 'a');
    if (a != b) return false;
  }
  return true;
}
}  // namespace detail

// Computed on the RAW post text, before any normalization. Words are
// whitespace-delimited tokens; chars are grapheme clusters; '?' and '!' are
// counted anywhere in the string.
inline TextStats text_statistics(std::string_view raw_text) {
  TextStats st;
  st.n_chars = static_cast<long>(grapheme_count(raw_text));
  for (char c : raw_text) {
    if (c == '?') ++st.n_question_marks;
    if (c == '!') ++st.n_exclaim_marks;
  }
  for (const auto& tok : split_ws(raw_text)) {
    ++st.n_words;
    if (tok[0] == '#') ++st.n_hashtags;
    if (detail::has_prefix_ci(tok, "http://") || detail::has_prefix_ci(tok, "https://") ||
        detail::has_prefix_ci(tok, "www."))
      ++st.n_urls;
  }
  return st;
}

}  // namespace reintel
