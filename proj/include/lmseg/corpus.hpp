#pragma once

// Corpus, gazetteer and dictionary loaders plus deterministic data splits.
//
// Corpus line format:   word<TAB>analysis(, analysis)*
// where an analysis is space-separated `morph:TAG` tokens. Lines starting
// with '#' are comments. Gazetteer entries are `-suffix` or `prefix-`.

#include <algorithm>
#include <cstdint>
#include <istream>
#include <ostream>
#include <random>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "lmseg/error.hpp"
#include "lmseg/morphotags.hpp"
#include "lmseg/unicode.hpp"

namespace lmseg {

enum class Role { Train, Tune, Dev, Test, Unlabeled };

struct Entry {
  std::u32string word;
  std::vector<LabeledSegmentation> golds;
};

class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(Role role) : role_(role) {}

  Role role() const { return role_; }
  void set_role(Role role) { role_ = role; }

  const std::vector<Entry>& entries() const { return entries_; }
  size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const Entry& operator[](size_t i) const { return entries_[i]; }

  bool contains(const std::u32string& word) const {
    return index_.count(word) > 0;
  }
  const Entry* find(const std::u32string& word) const {
    auto it = index_.find(word);
    return it == index_.end() ? nullptr : &entries_[it->second];
  }

  /// Adds an entry; throws DataError on a duplicate word or a gold analysis
  /// of a different word.
  void add(Entry entry) {
    if (index_.count(entry.word)) {
      throw DataError("duplicate word '" + to_utf8(entry.word) + "'");
    }
    if (role_ != Role::Unlabeled && entry.golds.empty()) {
      throw DataError("word '" + to_utf8(entry.word) +
                      "' has no gold analysis");
    }
    for (const auto& g : entry.golds) {
      if (g.word() != entry.word) {
        throw DataError("analysis of '" + to_utf8(g.word()) +
                        "' filed under '" + to_utf8(entry.word) + "'");
      }
    }
    index_.emplace(entry.word, entries_.size());
    entries_.push_back(std::move(entry));
  }

  /// Every gold analysis, in entry order.
  std::vector<LabeledSegmentation> all_golds() const {
    std::vector<LabeledSegmentation> out;
    for (const auto& e : entries_) {
      out.insert(out.end(), e.golds.begin(), e.golds.end());
    }
    return out;
  }

  bool operator==(const Dataset& o) const {
    if (entries_.size() != o.entries_.size()) return false;
    for (size_t i = 0; i < entries_.size(); ++i) {
      if (entries_[i].word != o.entries_[i].word ||
          entries_[i].golds != o.entries_[i].golds) {
        return false;
      }
    }
    return true;
  }

 private:
  Role role_ = Role::Train;
  std::vector<Entry> entries_;
  std::unordered_map<std::u32string, size_t> index_;
};

namespace detail {

inline std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

inline LabeledSegmentation parse_analysis(const std::u32string& word,
                                          std::string_view text,
                                          const Normalization& norm) {
  std::vector<Segment> segs;
  for (auto tok : split(trim(text), ' ')) {
    if (tok.empty()) continue;
    size_t colon = tok.find(':');
    if (colon == std::string_view::npos || colon == 0) {
      throw ParseError("token '" + std::string(tok) +
                       "' is not of the form morph:TAG");
    }
    segs.push_back({norm.apply(tok.substr(0, colon)),
                    MorphTag::parse(tok.substr(colon + 1))});
  }
  if (segs.empty()) throw ParseError("empty analysis");
  return LabeledSegmentation(word, std::move(segs));
}

}  // namespace detail

/// Reads a labeled corpus. Errors carry the 1-based line number.
inline Dataset load_corpus(std::istream& in, Role role = Role::Train,
                           const Normalization& norm = {}) {
  Dataset data(role);
  std::string raw;
  size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = detail::strip_cr(std::move(raw));
    if (trim(line).empty() || line.front() == '#') continue;
    try {
      size_t tab = line.find('\t');
      if (tab == std::string::npos) {
        throw ParseError("missing TAB between word and analyses");
      }
      Entry entry;
      entry.word = norm.apply(line.substr(0, tab));
      if (entry.word.empty()) throw ParseError("empty word");
      for (auto analysis : split(std::string_view(line).substr(tab + 1), ',')) {
        entry.golds.push_back(
            detail::parse_analysis(entry.word, analysis, norm));
      }
      data.add(std::move(entry));
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return data;
}

inline void write_corpus(std::ostream& out, const Dataset& data) {
  for (const auto& e : data.entries()) {
    out << to_utf8(e.word) << '\t';
    for (size_t i = 0; i < e.golds.size(); ++i) {
      if (i) out << ", ";
      out << e.golds[i].to_string();
    }
    out << '\n';
  }
}

/// One word per line; blank lines and '#' comments skipped, duplicates
/// collapsed.
inline Dataset load_word_list(std::istream& in,
                              const Normalization& norm = {}) {
  Dataset data(Role::Unlabeled);
  std::string raw;
  while (std::getline(in, raw)) {
    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    std::u32string w = norm.apply(line);
    if (!data.contains(w)) data.add({w, {}});
  }
  return data;
}

struct AffixGazetteer {
  std::unordered_set<std::u32string> prefixes;
  std::unordered_set<std::u32string> suffixes;

  bool empty() const { return prefixes.empty() && suffixes.empty(); }
};

inline AffixGazetteer load_gazetteer(std::istream& in,
                                     const Normalization& norm = {}) {
  AffixGazetteer gaz;
  std::string raw;
  size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    bool lead = line.front() == '-';
    bool trail = line.back() == '-';
    if (lead == trail || line.size() < 2) {
      throw ParseError("gazetteer line " + std::to_string(line_no) + ": '" +
                       std::string(line) +
                       "' needs exactly one '-' marker (-suffix or prefix-)");
    }
    if (lead) {
      gaz.suffixes.insert(norm.apply(line.substr(1)));
    } else {
      gaz.prefixes.insert(norm.apply(line.substr(0, line.size() - 1)));
    }
  }
  return gaz;
}

class DictionarySet {
 public:
  DictionarySet() = default;
  explicit DictionarySet(std::unordered_set<std::u32string> words)
      : words_(std::move(words)) {}

  bool contains(const std::u32string& w) const { return words_.count(w) > 0; }
  size_t size() const { return words_.size(); }
  void insert(std::u32string w) { words_.insert(std::move(w)); }

 private:
  std::unordered_set<std::u32string> words_;
};

inline DictionarySet load_dictionary(std::istream& in,
                                     const Normalization& norm = {}) {
  DictionarySet dict;
  std::string raw;
  while (std::getline(in, raw)) {
    std::string_view line = trim(raw);
    if (line.empty()) continue;
    dict.insert(norm.apply(line));
  }
  return dict;
}

struct Fold {
  Dataset train{Role::Train};
  Dataset tune{Role::Tune};
  Dataset dev{Role::Dev};
};

/// Shuffles the data with `seed` and cuts it into k near-equal chunks.
/// Fold f tunes on chunk f, develops on chunk f+1 (mod k) and trains on
/// the rest, which gives 800/100/100 for 1000 words and k = 10.
inline std::vector<Fold> split_folds(const Dataset& data, size_t k,
                                     uint64_t seed) {
  if (k < 2) throw DataError("fold count must be >= 2");
  if (k > data.size()) {
    throw DataError("fold count " + std::to_string(k) + " exceeds data size " +
                    std::to_string(data.size()));
  }
  std::vector<size_t> order(data.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<size_t> chunk_of(data.size());
  size_t base = data.size() / k, extra = data.size() % k, pos = 0;
  for (size_t c = 0; c < k; ++c) {
    size_t len = base + (c < extra ? 1 : 0);
    for (size_t j = 0; j < len; ++j) chunk_of[order[pos++]] = c;
  }

  std::vector<Fold> folds(k);
  for (size_t f = 0; f < k; ++f) {
    for (size_t idx : order) {
      const Entry& e = data[idx];
      size_t c = chunk_of[idx];
      if (c == f) {
        folds[f].tune.add(e);
      } else if (c == (f + 1) % k) {
        folds[f].dev.add(e);
      } else {
        folds[f].train.add(e);
      }
    }
  }
  return folds;
}

/// Concatenation of datasets; overlapping words are an error.
inline Dataset concat(std::initializer_list<const Dataset*> parts,
                      Role role = Role::Train) {
  Dataset out(role);
  for (const Dataset* d : parts) {
    for (const auto& e : d->entries()) {
      if (out.contains(e.word)) {
        throw DataError("word '" + to_utf8(e.word) +
                        "' occurs in more than one dataset");
      }
      out.add(e);
    }
  }
  return out;
}

}  // namespace lmseg
