#pragma once

// Feature templates for the segment lattice. A candidate segment
// word[i, j) with label y and previous label y' fires
//   * label-independent observation strings (boundary context n-grams at
//     both edges, gazetteer hits, dictionary hits, LSV bins), each
//     conjoined with y as "<obs>@<y>",
//   * the segment/tag conjunction SEGTAG:<y>:<segment>,
//   * the bare transition TRANS:<y'>:<y>.
// Feature strings are stored verbatim in model files.

#include <algorithm>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "lmseg/corpus.hpp"
#include "lmseg/error.hpp"
#include "lmseg/unicode.hpp"

namespace lmseg {

inline constexpr std::string_view kBeginLabel = "BEGIN";
inline constexpr char32_t kBeginSentinel = U'\u22A5';  // ⊥
inline constexpr char32_t kEndSentinel = U'\u22A4';    // ⊤

struct FeatureConfig {
  int max_context_ngram = 3;
  bool use_affix = false;
  bool use_dict = false;
  bool use_conjunction = true;
  bool use_lsv = false;
  std::vector<int> lsv_thresholds{2, 4, 8, 16};
  /// Longest segment considered by the lattice; 0 means unbounded.
  int max_segment_length = 12;

  void validate() const {
    if (max_context_ngram < 1 || max_context_ngram > 8) {
      throw ParseError("context n-gram length must be in [1, 8]");
    }
    if (max_segment_length < 0) {
      throw ParseError("max segment length must be >= 0");
    }
    for (size_t i = 1; i < lsv_thresholds.size(); ++i) {
      if (lsv_thresholds[i] <= lsv_thresholds[i - 1]) {
        throw ParseError("LSV thresholds must be strictly increasing");
      }
    }
  }
};

/// Feature-string to dense-index map. Grows until frozen; afterwards
/// unknown strings are dropped.
class FeatureVocabulary {
 public:
  std::optional<uint32_t> find(std::string_view name) const {
    auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  /// Index of `name`, adding it while the vocabulary is not frozen.
  std::optional<uint32_t> intern(std::string_view name) {
    if (auto hit = find(name)) return hit;
    if (frozen_) return std::nullopt;
    uint32_t id = static_cast<uint32_t>(names_.size());
    names_.emplace_back(name);
    index_.emplace(names_.back(), id);
    return id;
  }

  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }
  size_t size() const { return names_.size(); }
  const std::string& name(uint32_t i) const { return names_.at(i); }
  const std::vector<std::string>& names() const { return names_; }

  static FeatureVocabulary from_names(std::vector<std::string> names) {
    FeatureVocabulary v;
    for (auto& n : names) {
      if (!v.intern(n)) throw DataError("duplicate feature '" + n + "'");
    }
    v.freeze();
    return v;
  }

 private:
  struct Hash {
    using is_transparent = void;
    size_t operator()(std::string_view s) const {
      return std::hash<std::string_view>{}(s);
    }
  };
  std::vector<std::string> names_;
  std::unordered_map<std::string, uint32_t, Hash, std::equal_to<>> index_;
  bool frozen_ = false;
};

/// Binary sparse feature vector; indices strictly increasing.
struct SparseVector {
  std::vector<std::pair<uint32_t, double>> entries;

  double dot(const std::vector<double>& w) const {
    double s = 0.0;
    for (auto [i, v] : entries) s += w[i] * v;
    return s;
  }

  static SparseVector from_indices(std::vector<uint32_t> idx) {
    std::sort(idx.begin(), idx.end());
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    SparseVector out;
    out.entries.reserve(idx.size());
    for (uint32_t i : idx) out.entries.emplace_back(i, 1.0);
    return out;
  }
};

/// Letter successor/predecessor variety counts over an unlabeled word list.
class LsvTable {
 public:
  static LsvTable build(const std::vector<std::u32string>& corpus) {
    std::unordered_map<std::u32string, std::unordered_set<char32_t>> succ, pred;
    for (const auto& w : corpus) {
      for (size_t p = 0; p < w.size(); ++p) {
        succ[w.substr(0, p)].insert(w[p]);
        pred[w.substr(p + 1)].insert(w[p]);
      }
    }
    LsvTable t;
    for (auto& [k, v] : succ) t.successors_.emplace(k, static_cast<int>(v.size()));
    for (auto& [k, v] : pred) t.predecessors_.emplace(k, static_cast<int>(v.size()));
    return t;
  }

  int successor_variety(const std::u32string& prefix) const {
    auto it = successors_.find(prefix);
    return it == successors_.end() ? 0 : it->second;
  }
  int predecessor_variety(const std::u32string& suffix) const {
    auto it = predecessors_.find(suffix);
    return it == predecessors_.end() ? 0 : it->second;
  }

 private:
  std::unordered_map<std::u32string, int> successors_;
  std::unordered_map<std::u32string, int> predecessors_;
};

/// External knowledge sources plus the fingerprint of the file each came
/// from (empty when built in memory).
struct Resources {
  std::shared_ptr<const AffixGazetteer> gazetteer;
  std::shared_ptr<const DictionarySet> dictionary;
  std::shared_ptr<const LsvTable> lsv;

  struct Source {
    std::string path;
    std::string fingerprint;
    bool operator==(const Source&) const = default;
  };
  Source gazetteer_source, dictionary_source, lsv_source;
};

enum class Side { Left, Right };

/// Substrings of length 1..k ending (Left) or starting (Right) at
/// `boundary`. A window that runs one past the word edge is padded with a
/// sentinel and ends the sequence.
inline std::vector<std::string> context_ngram_features(
    const std::u32string& word, size_t boundary, Side side, int k) {
  std::vector<std::string> out;
  const size_t n = word.size();
  for (int len = 1; len <= k; ++len) {
    std::u32string gram;
    bool padded = false;
    if (side == Side::Left) {
      if (static_cast<size_t>(len) <= boundary) {
        gram = word.substr(boundary - len, len);
      } else {
        gram = std::u32string(1, kBeginSentinel) + word.substr(0, boundary);
        padded = true;
      }
    } else {
      if (boundary + len <= n) {
        gram = word.substr(boundary, len);
      } else {
        gram = word.substr(boundary) + std::u32string(1, kEndSentinel);
        padded = true;
      }
    }
    out.push_back(std::string("CTX:") + (side == Side::Left ? "L:" : "R:") +
                  std::to_string(len) + ":" + to_utf8(gram));
    if (padded) break;
  }
  return out;
}

/// Exact full-segment gazetteer match.
inline std::vector<std::string> gazetteer_features(const std::u32string& segment,
                                                   const AffixGazetteer& gaz) {
  std::vector<std::string> out;
  if (gaz.suffixes.count(segment)) out.emplace_back("GAZ:SUF");
  if (gaz.prefixes.count(segment)) out.emplace_back("GAZ:PRE");
  return out;
}

inline std::vector<std::string> dictionary_features(
    const std::u32string& segment, const DictionarySet& dict) {
  if (!dict.contains(segment)) return {};
  std::string bucket =
      segment.size() >= 5 ? "5+" : std::to_string(segment.size());
  return {"DICT:HIT", "DICT:LEN:" + bucket};
}

inline std::string conjunction_feature(const std::u32string& segment,
                                       std::string_view label) {
  return "SEGTAG:" + std::string(label) + ":" + to_utf8(segment);
}

inline std::string transition_feature(std::string_view prev,
                                      std::string_view label) {
  return "TRANS:" + std::string(prev) + ":" + std::string(label);
}

/// Successor variety of word[0, b) and predecessor variety of word[b, n),
/// each binned against the thresholds.
inline std::vector<std::string> lsv_features(const std::u32string& word,
                                             size_t boundary,
                                             const LsvTable& table,
                                             const std::vector<int>& thresholds) {
  std::vector<std::string> out;
  int s = table.successor_variety(word.substr(0, boundary));
  int p = table.predecessor_variety(word.substr(boundary));
  for (int t : thresholds) {
    if (s >= t) out.push_back("LSV:S:\u2265" + std::to_string(t));
  }
  for (int t : thresholds) {
    if (p >= t) out.push_back("LSV:P:\u2265" + std::to_string(t));
  }
  return out;
}

/// Label-independent observation strings of word[begin, end). Boundary
/// templates are prefixed with the edge they describe ("B|" segment start,
/// "E|" segment end).
inline std::vector<std::string> span_observations(const std::u32string& word,
                                                  size_t begin, size_t end,
                                                  const FeatureConfig& cfg,
                                                  const Resources& res) {
  std::vector<std::string> obs;
  for (auto [edge, pos] : {std::pair{"B|", begin}, std::pair{"E|", end}}) {
    for (Side side : {Side::Left, Side::Right}) {
      for (auto& f :
           context_ngram_features(word, pos, side, cfg.max_context_ngram)) {
        obs.push_back(edge + f);
      }
    }
    if (cfg.use_lsv && res.lsv && pos > 0 && pos < word.size()) {
      for (auto& f : lsv_features(word, pos, *res.lsv, cfg.lsv_thresholds)) {
        obs.push_back(edge + f);
      }
    }
  }
  const std::u32string segment = word.substr(begin, end - begin);
  if (cfg.use_affix && res.gazetteer) {
    for (auto& f : gazetteer_features(segment, *res.gazetteer)) {
      obs.push_back(std::move(f));
    }
  }
  if (cfg.use_dict && res.dictionary) {
    for (auto& f : dictionary_features(segment, *res.dictionary)) {
      obs.push_back(std::move(f));
    }
  }
  return obs;
}

inline std::string conjoin(std::string_view obs, std::string_view label) {
  std::string s;
  s.reserve(obs.size() + label.size() + 1);
  s += obs;
  s += '@';
  s += label;
  return s;
}

/// Every feature string fired by segment word[begin, end) labeled `label`
/// after `prev` (kBeginLabel for the first segment).
inline std::vector<std::string> feature_strings(const std::u32string& word,
                                                size_t begin, size_t end,
                                                std::string_view label,
                                                std::string_view prev,
                                                const FeatureConfig& cfg,
                                                const Resources& res) {
  if (begin >= end || end > word.size()) {
    throw DataError("span [" + std::to_string(begin) + ", " +
                    std::to_string(end) + ") out of range for word of length " +
                    std::to_string(word.size()));
  }
  std::vector<std::string> out;
  for (const auto& o : span_observations(word, begin, end, cfg, res)) {
    out.push_back(conjoin(o, label));
  }
  if (cfg.use_conjunction) {
    out.push_back(conjunction_feature(word.substr(begin, end - begin), label));
  }
  out.push_back(transition_feature(prev, label));
  return out;
}

/// Maps the fired strings through `vocab` (growing it unless frozen).
inline SparseVector featurize(const std::u32string& word, size_t begin,
                              size_t end, std::string_view label,
                              std::string_view prev, const FeatureConfig& cfg,
                              const Resources& res, FeatureVocabulary& vocab) {
  std::vector<uint32_t> idx;
  for (const auto& f : feature_strings(word, begin, end, label, prev, cfg, res)) {
    if (auto i = vocab.intern(f)) idx.push_back(*i);
  }
  return SparseVector::from_indices(std::move(idx));
}

inline SparseVector featurize(const std::u32string& word, size_t begin,
                              size_t end, std::string_view label,
                              std::string_view prev, const FeatureConfig& cfg,
                              const Resources& res,
                              const FeatureVocabulary& vocab) {
  std::vector<uint32_t> idx;
  for (const auto& f : feature_strings(word, begin, end, label, prev, cfg, res)) {
    if (auto i = vocab.find(f)) idx.push_back(*i);
  }
  return SparseVector::from_indices(std::move(idx));
}

}  // namespace lmseg
