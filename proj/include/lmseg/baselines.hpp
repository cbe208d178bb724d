#pragma once

// Comparison systems: the character-level CRF obtained by capping segments
// at one character, and whole-word maximum-entropy tag classifiers over
// character n-grams (plain and +Split).

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lmseg/corpus.hpp"
#include "lmseg/features.hpp"
#include "lmseg/morphotags.hpp"
#include "lmseg/optimize.hpp"
#include "lmseg/training.hpp"

namespace lmseg {

/// Same training setup with every segment restricted to one character; the
/// semi-CRF then reduces to a first-order linear-chain CRF over characters.
inline TrainConfig char_crf_mode(TrainConfig cfg) {
  cfg.features.max_segment_length = 1;
  return cfg;
}

/// Splits every segment into single characters carrying the segment's tag.
inline LabeledSegmentation to_char_level(const LabeledSegmentation& ls) {
  std::vector<Segment> out;
  for (const auto& s : ls.segments()) {
    for (char32_t c : s.text) out.push_back({std::u32string(1, c), s.tag});
  }
  return LabeledSegmentation(ls.word(), std::move(out));
}

inline Dataset to_char_level(const Dataset& data) {
  Dataset out(data.role());
  for (const auto& e : data.entries()) {
    Entry c{e.word, {}};
    for (const auto& g : e.golds) c.golds.push_back(to_char_level(g));
    out.add(std::move(c));
  }
  return out;
}

/// Merges runs of adjacent segments that carry the same tag.
inline LabeledSegmentation merge_same_label(const LabeledSegmentation& ls) {
  std::vector<Segment> out;
  for (const auto& s : ls.segments()) {
    if (!out.empty() && out.back().tag == s.tag) {
      out.back().text += s.text;
    } else {
      out.push_back(s);
    }
  }
  return LabeledSegmentation(ls.word(), std::move(out));
}

enum class Regularizer { L1, L2 };

struct MaxEntConfig {
  int max_ngram = 3;
  Regularizer regularizer = Regularizer::L1;
  double coefficient = 0.1;
  bool split_mode = false;
  size_t max_iterations = 500;
  double tolerance = 1e-6;

  void validate() const {
    if (max_ngram < 1) throw ParseError("max n-gram length must be >= 1");
    if (!(coefficient >= 0.0)) throw ParseError("coefficient must be >= 0");
  }
};

struct TagExample {
  std::u32string word;
  std::string tag;  // ordered bundle joined by ':'; empty when uninflected
};

/// Whole-word tag examples: the first gold's bundle at `level`.
inline std::vector<TagExample> tag_examples(const Dataset& data,
                                            TagsetLevel level) {
  std::vector<TagExample> out;
  for (const auto& e : data.entries()) {
    if (e.golds.empty()) {
      throw DataError("word '" + to_utf8(e.word) + "' has no tag");
    }
    out.push_back(
        {e.word, bundle_string(inflection_bundle(e.golds.front().projected(level)))});
  }
  return out;
}

/// Character n-grams of length 1..k over the word framed by begin/end
/// markers, plus a bias feature.
inline std::vector<std::string> char_ngram_features(const std::u32string& word,
                                                    int k) {
  std::u32string framed = std::u32string(1, kBeginSentinel) + word +
                          std::u32string(1, kEndSentinel);
  std::vector<std::string> out{"BIAS"};
  for (int n = 1; n <= k; ++n) {
    for (size_t i = 0; i + n <= framed.size(); ++i) {
      out.push_back("NG:" + to_utf8(framed.substr(i, n)));
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// Multinomial log-linear classifier over full-word tags. Parameters live
/// in blocks (observation feature x unit); a class scores the blocks of
/// its full tag and, in split mode, of each of its constituents.
class MaxEntClassifier {
 public:
  MaxEntConfig config;
  std::vector<std::string> classes;
  std::vector<std::string> units;
  std::vector<std::vector<size_t>> class_units;
  FeatureVocabulary features;
  std::vector<double> weights;  // [feature * units.size() + unit]

  size_t num_parameters() const { return weights.size(); }

  /// Rebuilds class_units from classes/units (after loading).
  void index_units() {
    std::unordered_map<std::string, size_t> uidx;
    for (size_t u = 0; u < units.size(); ++u) uidx.emplace(units[u], u);
    class_units.assign(classes.size(), {});
    for (size_t c = 0; c < classes.size(); ++c) {
      class_units[c].push_back(uidx.at("FULL=" + classes[c]));
      if (config.split_mode && !classes[c].empty()) {
        for (auto part : split(classes[c], ':')) {
          class_units[c].push_back(uidx.at("PART=" + std::string(part)));
        }
      }
    }
  }

  std::vector<uint32_t> observe(const std::u32string& word) const {
    std::vector<uint32_t> idx;
    for (const auto& f : char_ngram_features(word, config.max_ngram)) {
      if (auto i = features.find(f)) idx.push_back(*i);
    }
    return idx;
  }

  std::vector<double> class_scores(const std::vector<uint32_t>& obs,
                                   const std::vector<double>& w) const {
    const size_t U = units.size();
    std::vector<double> unit_score(U, 0.0);
    for (uint32_t f : obs) {
      const double* row = w.data() + static_cast<size_t>(f) * U;
      for (size_t u = 0; u < U; ++u) unit_score[u] += row[u];
    }
    std::vector<double> out(classes.size(), 0.0);
    for (size_t c = 0; c < classes.size(); ++c) {
      for (size_t u : class_units[c]) out[c] += unit_score[u];
    }
    return out;
  }

  /// Highest-scoring class; the lowest class index wins ties.
  std::string predict(const std::u32string& word) const {
    auto s = class_scores(observe(word), weights);
    size_t best = 0;
    for (size_t c = 1; c < s.size(); ++c) {
      if (s[c] > s[best]) best = c;
    }
    return classes.at(best);
  }
};

inline MaxEntClassifier maxent_train(const std::vector<TagExample>& data,
                                     const MaxEntConfig& cfg) {
  cfg.validate();
  if (data.empty()) throw DataError("MaxEnt training set is empty");
  MaxEntClassifier clf;
  clf.config = cfg;
  std::set<std::string> cls, parts;
  for (const auto& ex : data) {
    cls.insert(ex.tag);
    if (cfg.split_mode && !ex.tag.empty()) {
      for (auto p : split(ex.tag, ':')) {
        if (p.empty()) {
          throw DataError("malformed tag '" + ex.tag + "' for word '" +
                          to_utf8(ex.word) + "'");
        }
        parts.emplace(p);
      }
    }
  }
  clf.classes.assign(cls.begin(), cls.end());
  for (const auto& c : clf.classes) clf.units.push_back("FULL=" + c);
  for (const auto& p : parts) clf.units.push_back("PART=" + p);
  clf.index_units();

  std::unordered_map<std::string, size_t> class_index;
  for (size_t c = 0; c < clf.classes.size(); ++c) class_index[clf.classes[c]] = c;
  std::vector<std::vector<uint32_t>> obs;
  std::vector<size_t> gold;
  for (const auto& ex : data) {
    std::vector<uint32_t> idx;
    for (const auto& f : char_ngram_features(ex.word, cfg.max_ngram)) {
      idx.push_back(*clf.features.intern(f));
    }
    obs.push_back(std::move(idx));
    gold.push_back(class_index.at(ex.tag));
  }
  clf.features.freeze();

  const size_t U = clf.units.size();
  const size_t dim = clf.features.size() * U;
  const double l2 = cfg.regularizer == Regularizer::L2 ? cfg.coefficient : 0.0;
  auto objective = [&](const std::vector<double>& w, std::vector<double>& g) {
    g.assign(dim, 0.0);
    double value = 0.0;
    std::vector<double> unit_grad(U);
    for (size_t i = 0; i < obs.size(); ++i) {
      auto s = clf.class_scores(obs[i], w);
      double lse = kNegInf;
      for (double v : s) lse = log_add(lse, v);
      value += lse - s[gold[i]];
      std::fill(unit_grad.begin(), unit_grad.end(), 0.0);
      for (size_t c = 0; c < s.size(); ++c) {
        double p = std::exp(s[c] - lse) - (c == gold[i] ? 1.0 : 0.0);
        for (size_t u : clf.class_units[c]) unit_grad[u] += p;
      }
      for (uint32_t f : obs[i]) {
        double* row = g.data() + static_cast<size_t>(f) * U;
        for (size_t u = 0; u < U; ++u) row[u] += unit_grad[u];
      }
    }
    if (l2 > 0.0) {
      double sq = 0.0;
      for (size_t k = 0; k < dim; ++k) {
        sq += w[k] * w[k];
        g[k] += l2 * w[k];
      }
      value += 0.5 * l2 * sq;
    }
    return value;
  };
  LbfgsOptions opt;
  opt.max_iterations = cfg.max_iterations;
  opt.tolerance = cfg.tolerance;
  opt.l1 = cfg.regularizer == Regularizer::L1 ? cfg.coefficient : 0.0;
  std::vector<double> w(dim, 0.0);
  minimize(objective, w, opt);
  clf.weights = std::move(w);
  return clf;
}

inline std::string maxent_predict(const MaxEntClassifier& clf,
                                  const std::u32string& word) {
  return clf.predict(word);
}

}  // namespace lmseg
