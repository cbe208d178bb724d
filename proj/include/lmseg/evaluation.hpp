#pragma once

// Segmentation, stemming, root-detection and tag-classification metrics
// plus the error analyses (undersegmentation counts, novel morph counts).
// Every word is scored against its best-matching gold analysis.

#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "lmseg/corpus.hpp"
#include "lmseg/error.hpp"
#include "lmseg/morphotags.hpp"

namespace lmseg {

using Predictions = std::unordered_map<std::u32string, LabeledSegmentation>;

struct BoundaryScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  size_t gold_index = 0;
};

/// P/R/F1 of two internal-boundary sets. Both empty scores 1; an undefined
/// ratio (empty denominator) otherwise scores 0.
inline BoundaryScore boundary_prf(const std::vector<size_t>& pred,
                                  const std::vector<size_t>& gold) {
  BoundaryScore s;
  if (pred.empty() && gold.empty()) {
    s.precision = s.recall = s.f1 = 1.0;
    return s;
  }
  std::set<size_t> g(gold.begin(), gold.end());
  size_t hit = 0;
  for (size_t b : pred) hit += g.count(b);
  s.precision = pred.empty() ? 0.0 : static_cast<double>(hit) / pred.size();
  s.recall = gold.empty() ? 0.0 : static_cast<double>(hit) / gold.size();
  s.f1 = (s.precision + s.recall) > 0
             ? 2 * s.precision * s.recall / (s.precision + s.recall)
             : 0.0;
  return s;
}

/// Scores `pred` against each gold and keeps the gold with the highest F1
/// (first one on ties).
inline BoundaryScore boundary_f1(const LabeledSegmentation& pred,
                                 const std::vector<LabeledSegmentation>& golds) {
  if (golds.empty()) throw DataError("no gold analysis to compare against");
  BoundaryScore best;
  best.f1 = -1.0;
  for (size_t i = 0; i < golds.size(); ++i) {
    if (golds[i].word() != pred.word()) {
      throw DataError("prediction for '" + to_utf8(pred.word()) +
                      "' compared with gold for '" + to_utf8(golds[i].word()) +
                      "'");
    }
    BoundaryScore s = boundary_prf(pred.boundaries(), golds[i].boundaries());
    if (s.f1 > best.f1) {
      best = s;
      best.gold_index = i;
    }
  }
  return best;
}

/// Named metrics in insertion order plus per-word segmentation scores.
struct EvalReport {
  struct WordScore {
    std::u32string word;
    double precision, recall, f1;
  };
  std::vector<std::pair<std::string, double>> metrics;
  std::vector<WordScore> per_word;

  void set(const std::string& name, double value) {
    for (auto& [k, v] : metrics) {
      if (k == name) {
        v = value;
        return;
      }
    }
    metrics.emplace_back(name, value);
  }
  double get(const std::string& name) const {
    for (const auto& [k, v] : metrics) {
      if (k == name) return v;
    }
    throw Error("metric '" + name + "' not in report");
  }
  bool has(const std::string& name) const {
    for (const auto& [k, v] : metrics) {
      if (k == name) return true;
    }
    return false;
  }

  std::string to_tsv() const {
    std::ostringstream out;
    out << "metric\tvalue\n";
    char buf[64];
    for (const auto& [k, v] : metrics) {
      std::snprintf(buf, sizeof buf, "%.6f", v);
      out << k << '\t' << buf << '\n';
    }
    return out.str();
  }

  std::string to_json() const {
    nlohmann::ordered_json j;
    for (const auto& [k, v] : metrics) j["metrics"][k] = v;
    return j.dump(2) + "\n";
  }
};

namespace detail {

inline const LabeledSegmentation& prediction_for(const Predictions& preds,
                                                 const Entry& e) {
  auto it = preds.find(e.word);
  if (it == preds.end()) throw DataError("missing prediction");
  return it->second;
}

inline void require_all(const Predictions& preds, const Dataset& data) {
  std::string missing;
  size_t count = 0;
  for (const auto& e : data.entries()) {
    if (!preds.count(e.word)) {
      if (count < 20) missing += (count ? ", " : "") + to_utf8(e.word);
      ++count;
    }
  }
  if (count) {
    throw DataError("missing predictions for " + std::to_string(count) +
                    " word(s): " + missing + (count > 20 ? ", ..." : ""));
  }
}

}  // namespace detail

/// Unweighted mean over words of max-over-gold boundary P, R and F1.
inline EvalReport macro_f1(const Predictions& preds, const Dataset& data) {
  detail::require_all(preds, data);
  EvalReport r;
  double p = 0, rc = 0, f = 0;
  for (const auto& e : data.entries()) {
    BoundaryScore s = boundary_f1(detail::prediction_for(preds, e), e.golds);
    r.per_word.push_back({e.word, s.precision, s.recall, s.f1});
    p += s.precision;
    rc += s.recall;
    f += s.f1;
  }
  const double n = data.empty() ? 1.0 : static_cast<double>(data.size());
  r.set("precision", p / n);
  r.set("recall", rc / n);
  r.set("f1", f / n);
  r.set("words", static_cast<double>(data.size()));
  return r;
}

struct StemRootAccuracy {
  double root_accuracy = 0.0;
  double stem_accuracy = 0.0;
};

/// Exact-match root-list and stem accuracy, matched against any gold.
inline StemRootAccuracy stem_and_root_accuracy(const Predictions& preds,
                                               const Dataset& data) {
  detail::require_all(preds, data);
  size_t roots_ok = 0, stems_ok = 0;
  for (const auto& e : data.entries()) {
    const auto& pred = detail::prediction_for(preds, e);
    const auto roots = root_segments(pred);
    const auto stem = stem_of(pred);
    bool r = false, s = false;
    for (const auto& g : e.golds) {
      r = r || root_segments(g) == roots;
      s = s || stem_of(g) == stem;
    }
    roots_ok += r;
    stems_ok += s;
  }
  const double n = data.empty() ? 1.0 : static_cast<double>(data.size());
  return {roots_ok / n, stems_ok / n};
}

struct FeatureScore {
  size_t tp = 0, fp = 0, fn = 0;
  double f1() const {
    return tp + fp + fn == 0 ? 0.0
                             : 2.0 * tp / (2.0 * tp + fp + fn);
  }
};

struct TagMetrics {
  double full_tag_accuracy = 0.0;
  double feature_macro_f1 = 0.0;
  std::map<std::string, FeatureScore> per_feature;
};

/// Predicted inflectional bundle per word.
using BundlePredictions =
    std::unordered_map<std::u32string, std::vector<std::string>>;

/// Full-bundle accuracy and macro F1 over individual inflectional features.
/// Gold labels are projected to `level` before their bundles are read, so
/// a level-4 prediction is compared with feature names and a level-5 one
/// with values. Each word is scored against the gold it matches exactly,
/// else the one sharing the most features.
inline TagMetrics tag_classification_metrics(const BundlePredictions& preds,
                                             const Dataset& data,
                                             TagsetLevel level) {
  TagMetrics out;
  size_t correct = 0;
  std::set<std::string> gold_classes;
  for (const auto& e : data.entries()) {
    auto pit = preds.find(e.word);
    if (pit == preds.end()) {
      throw DataError("missing prediction for '" + to_utf8(e.word) + "'");
    }
    const auto& bundle = pit->second;
    std::map<std::string, int> pc;
    for (const auto& c : bundle) ++pc[c];

    bool exact = false;
    size_t best_tp = 0;
    std::map<std::string, int> best_gc;
    bool first = true;
    for (const auto& g : e.golds) {
      const auto gb = inflection_bundle(g.projected(level));
      std::map<std::string, int> gc;
      for (const auto& c : gb) ++gc[c];
      size_t tp = 0;
      for (const auto& [c, k] : pc) {
        auto it = gc.find(c);
        if (it != gc.end()) tp += static_cast<size_t>(std::min(k, it->second));
      }
      if (gb == bundle) {
        if (!exact) best_gc = gc;
        exact = true;
      } else if (!exact && (first || tp > best_tp)) {
        best_gc = gc;
        best_tp = tp;
      }
      first = false;
    }
    correct += exact;
    for (const auto& [c, k] : best_gc) gold_classes.insert(c);
    std::set<std::string> classes;
    for (const auto& [c, k] : pc) classes.insert(c);
    for (const auto& [c, k] : best_gc) classes.insert(c);
    for (const auto& c : classes) {
      int p = pc.count(c) ? pc.at(c) : 0;
      int g = best_gc.count(c) ? best_gc.at(c) : 0;
      auto& fs = out.per_feature[c];
      int tp = std::min(p, g);
      fs.tp += static_cast<size_t>(tp);
      fs.fp += static_cast<size_t>(p - tp);
      fs.fn += static_cast<size_t>(g - tp);
    }
  }
  const double n = data.empty() ? 1.0 : static_cast<double>(data.size());
  out.full_tag_accuracy = correct / n;
  double sum = 0.0;
  for (const auto& c : gold_classes) sum += out.per_feature[c].f1();
  out.feature_macro_f1 = gold_classes.empty() ? 0.0 : sum / gold_classes.size();
  return out;
}

inline TagMetrics tag_classification_metrics(const Predictions& preds,
                                             const Dataset& data,
                                             TagsetLevel level) {
  detail::require_all(preds, data);
  BundlePredictions bundles;
  for (const auto& e : data.entries()) {
    bundles.emplace(e.word, inflection_bundle(detail::prediction_for(preds, e)));
  }
  return tag_classification_metrics(bundles, data, level);
}

/// Missed-boundary counts keyed by the projected labels on either side.
using UndersegMatrix = std::map<std::pair<std::string, std::string>, size_t>;

inline UndersegMatrix undersegmentation_matrix(const Predictions& preds,
                                               const Dataset& data,
                                               TagsetLevel level) {
  detail::require_all(preds, data);
  UndersegMatrix m;
  for (const auto& e : data.entries()) {
    const auto& pred = detail::prediction_for(preds, e);
    const auto& gold = e.golds[boundary_f1(pred, e.golds).gold_index];
    const auto pb = pred.boundaries();
    std::set<size_t> have(pb.begin(), pb.end());
    const auto& segs = gold.segments();
    size_t pos = 0;
    for (size_t i = 0; i + 1 < segs.size(); ++i) {
      pos += segs[i].text.size();
      if (!have.count(pos)) {
        ++m[{project(segs[i].tag, level).to_string(),
             project(segs[i + 1].tag, level).to_string()}];
      }
    }
  }
  return m;
}

inline size_t total(const UndersegMatrix& m) {
  size_t s = 0;
  for (const auto& [k, v] : m) s += v;
  return s;
}

inline std::string to_tsv(const UndersegMatrix& m) {
  std::ostringstream out;
  out << "left\tright\tcount\n";
  for (const auto& [k, v] : m) out << k.first << '\t' << k.second << '\t' << v << '\n';
  return out.str();
}

/// Root and affix surface types observed in a set of gold analyses.
struct MorphInventory {
  std::set<std::u32string> roots;
  std::set<std::u32string> affixes;
};

inline MorphInventory morph_inventory(const Dataset& data) {
  MorphInventory inv;
  for (const auto& e : data.entries()) {
    for (const auto& g : e.golds) {
      for (const auto& s : g.segments()) {
        if (s.tag.is_root()) inv.roots.insert(s.text);
        if (s.tag.is_affix()) inv.affixes.insert(s.text);
      }
    }
  }
  return inv;
}

struct NovelCounts {
  std::set<std::u32string> roots;
  std::set<std::u32string> affixes;
};

/// Distinct predicted root/affix types absent from `training` that match a
/// segment of the best gold with the same span and position class.
inline NovelCounts novel_morph_counts(const Predictions& preds,
                                      const Dataset& data,
                                      const MorphInventory& training) {
  detail::require_all(preds, data);
  NovelCounts out;
  for (const auto& e : data.entries()) {
    const auto& pred = detail::prediction_for(preds, e);
    const auto& gold = e.golds[boundary_f1(pred, e.golds).gold_index];
    std::map<std::pair<size_t, size_t>, Position> gold_spans;
    size_t pos = 0;
    for (const auto& s : gold.segments()) {
      gold_spans[{pos, s.text.size()}] = s.tag.position();
      pos += s.text.size();
    }
    pos = 0;
    for (const auto& s : pred.segments()) {
      auto it = gold_spans.find({pos, s.text.size()});
      pos += s.text.size();
      if (it == gold_spans.end() || it->second != s.tag.position()) continue;
      if (s.tag.is_root() && !training.roots.count(s.text)) {
        out.roots.insert(s.text);
      } else if (s.tag.is_affix() && !training.affixes.count(s.text)) {
        out.affixes.insert(s.text);
      }
    }
  }
  return out;
}

}  // namespace lmseg
