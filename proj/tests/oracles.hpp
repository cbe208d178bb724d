#pragma once

// Reference implementations used only by the tests. Nothing here shares
// code with the dynamic programs under test: scores come from feature
// strings, sums from explicit enumeration.

#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "lmseg/lmseg.hpp"

namespace oracle {

using lmseg::LabeledSegmentation;
using lmseg::Model;
using lmseg::MorphTag;

inline double lse(const std::vector<double>& v) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : v) mx = std::max(mx, x);
  if (std::isinf(mx)) return mx;
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

/// Calls fn(lengths) for every composition of n into parts of size <= m.
inline void compositions(size_t n, size_t m,
                         const std::function<void(const std::vector<size_t>&)>& fn) {
  std::vector<size_t> cur;
  std::function<void(size_t)> rec = [&](size_t left) {
    if (left == 0) {
      fn(cur);
      return;
    }
    for (size_t len = 1; len <= std::min(m, left); ++len) {
      cur.push_back(len);
      rec(left - len);
      cur.pop_back();
    }
  };
  rec(n);
}

/// Calls fn(labels) for every sequence of k labels drawn from [0, L).
inline void label_sequences(size_t k, size_t L,
                            const std::function<void(const std::vector<size_t>&)>& fn) {
  std::vector<size_t> cur(k, 0);
  while (true) {
    fn(cur);
    size_t i = k;
    while (i > 0) {
      --i;
      if (++cur[i] < L) break;
      cur[i] = 0;
      if (i == 0) return;
    }
    if (k == 0) return;
  }
}

struct Path {
  std::vector<size_t> lengths;
  std::vector<size_t> labels;
};

/// Every labeled segmentation of an n-letter word with L labels.
inline std::vector<Path> all_paths(size_t n, size_t m, size_t L) {
  std::vector<Path> out;
  compositions(n, m, [&](const std::vector<size_t>& lens) {
    label_sequences(lens.size(), L, [&](const std::vector<size_t>& labs) {
      out.push_back({lens, labs});
    });
  });
  return out;
}

inline LabeledSegmentation to_segmentation(const Model& model,
                                           const std::u32string& word,
                                           const Path& p) {
  std::vector<MorphTag> tags;
  for (size_t y : p.labels) tags.push_back(model.tagset.at(y));
  return LabeledSegmentation::from_lengths(word, p.lengths, tags);
}

/// Score of a path summed straight from the potentials, in the same order
/// the decoder accumulates it.
inline double potential_score(const lmseg::Potentials& pot, const Path& p) {
  double s = 0.0;
  size_t prev = pot.L, pos = 0;
  for (size_t i = 0; i < p.lengths.size(); ++i) {
    s += pot.phi(pos, p.lengths[i], p.labels[i], prev);
    prev = p.labels[i];
    pos += p.lengths[i];
  }
  return s;
}

struct Enumeration {
  double log_z = 0.0;
  /// (start, len, label) -> probability
  std::map<std::tuple<size_t, size_t, size_t>, double> segment_marginal;
  Path best;
  double best_score = -std::numeric_limits<double>::infinity();
};

/// Decoder tie-break: fewer segments, then labels, then lengths.
inline bool path_before(const Path& a, const Path& b) {
  if (a.lengths.size() != b.lengths.size()) return a.lengths.size() < b.lengths.size();
  if (a.labels != b.labels) return a.labels < b.labels;
  return a.lengths < b.lengths;
}

/// Score of segment word[start, start+len) labeled y after `prev` (L for
/// BEGIN), summed over the weights of its feature strings.
class CellScorer {
 public:
  CellScorer(const Model& model, const std::u32string& word)
      : model_(model), word_(word) {}

  double operator()(size_t start, size_t len, size_t y, size_t prev) {
    const auto key = std::make_tuple(start, len, y, prev);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    const size_t L = model_.num_labels();
    const std::string prev_name = prev == L ? "BEGIN" : model_.tagset.name(prev);
    double s = 0.0;
    for (const auto& f : lmseg::feature_strings(word_, start, start + len,
                                                model_.tagset.name(y), prev_name,
                                                model_.features, model_.resources)) {
      if (auto i = model_.vocab.find(f)) s += model_.weights[*i];
    }
    cache_.emplace(key, s);
    return s;
  }

  double path(const Path& p) {
    double s = 0.0;
    size_t prev = model_.num_labels(), pos = 0;
    for (size_t i = 0; i < p.lengths.size(); ++i) {
      s += (*this)(pos, p.lengths[i], p.labels[i], prev);
      prev = p.labels[i];
      pos += p.lengths[i];
    }
    return s;
  }

 private:
  const Model& model_;
  const std::u32string& word_;
  std::map<std::tuple<size_t, size_t, size_t, size_t>, double> cache_;
};

/// Brute force over all labeled segmentations. log Z and marginals use
/// feature-string scores; the argmax uses the potentials so that its score
/// is bit-comparable with the decoder's.
inline Enumeration enumerate(const Model& model, const std::u32string& word) {
  const size_t n = word.size(), m = model.max_len(n), L = model.num_labels();
  auto paths = all_paths(n, m, L);
  const lmseg::Potentials pot = lmseg::potentials(model, word);
  CellScorer cell(model, word);
  std::vector<double> scores;
  scores.reserve(paths.size());
  Enumeration e;
  for (const auto& p : paths) {
    scores.push_back(cell.path(p));
    const double ps = potential_score(pot, p);
    if (ps > e.best_score || (ps == e.best_score && path_before(p, e.best))) {
      e.best = p;
      e.best_score = ps;
    }
  }
  e.log_z = lse(scores);
  for (size_t i = 0; i < paths.size(); ++i) {
    const double pr = std::exp(scores[i] - e.log_z);
    size_t pos = 0;
    for (size_t j = 0; j < paths[i].lengths.size(); ++j) {
      e.segment_marginal[{pos, paths[i].lengths[j], paths[i].labels[j]}] += pr;
      pos += paths[i].lengths[j];
    }
  }
  return e;
}

/// Log-partition of a first-order linear-chain CRF over characters, with
/// emission and transition scores read from the model's feature strings.
inline double linear_chain_log_z(const Model& model, const std::u32string& word) {
  const size_t n = word.size(), L = model.num_labels();
  auto weight_of = [&](const std::string& f) {
    auto i = model.vocab.find(f);
    return i ? model.weights[*i] : 0.0;
  };
  auto emission = [&](size_t i, size_t y) {
    double s = 0.0;
    const std::string& label = model.tagset.name(y);
    // Any prev works for the label-local strings; the TRANS string is
    // filtered out and scored separately.
    for (const auto& f : lmseg::feature_strings(word, i, i + 1, label, "BEGIN",
                                                model.features, model.resources)) {
      if (f.rfind("TRANS:", 0) == 0) continue;
      s += weight_of(f);
    }
    return s;
  };
  auto trans = [&](const std::string& prev, size_t y) {
    return weight_of(lmseg::transition_feature(prev, model.tagset.name(y)));
  };
  std::vector<double> a(L);
  for (size_t y = 0; y < L; ++y) a[y] = trans("BEGIN", y) + emission(0, y);
  for (size_t i = 1; i < n; ++i) {
    std::vector<double> next(L);
    for (size_t y = 0; y < L; ++y) {
      std::vector<double> terms;
      for (size_t p = 0; p < L; ++p) {
        terms.push_back(a[p] + trans(model.tagset.name(p), y));
      }
      next[y] = lse(terms) + emission(i, y);
    }
    a = std::move(next);
  }
  return lse(a);
}

inline const std::vector<std::string>& label_pool() {
  static const std::vector<std::string> pool{
      "PREFIX:DERIV", "ROOT", "SUFFIX:DERIV", "SUFFIX:INFL"};
  return pool;
}

/// A level-2 model over `word` with `L` labels and every feature of every
/// span/label/predecessor in its vocabulary, weights uniform in [-r, r].
inline Model random_model(const std::u32string& word, size_t L, size_t m,
                          std::mt19937_64& rng, double r = 2.0,
                          lmseg::FeatureConfig features = {}) {
  Model model;
  features.max_segment_length = static_cast<int>(m);
  model.features = features;
  std::vector<MorphTag> tags;
  for (size_t i = 0; i < L; ++i) tags.push_back(MorphTag::parse(label_pool().at(i)));
  model.tagset = lmseg::Tagset(lmseg::TagsetLevel(2), tags);
  const size_t n = word.size(), mm = model.max_len(n);
  for (size_t s = 0; s < n; ++s) {
    for (size_t len = 1; len <= mm && s + len <= n; ++len) {
      for (size_t y = 0; y < L; ++y) {
        for (size_t p = 0; p <= L; ++p) {
          std::string prev = p == L ? "BEGIN" : model.tagset.name(p);
          lmseg::featurize(word, s, s + len, model.tagset.name(y), prev,
                           model.features, model.resources, model.vocab);
        }
      }
    }
  }
  model.vocab.freeze();
  std::uniform_real_distribution<double> u(-r, r);
  model.weights.resize(model.vocab.size());
  for (auto& w : model.weights) w = u(rng);
  return model;
}

inline std::u32string random_word(size_t n, std::mt19937_64& rng,
                                  const std::u32string& alphabet = U"abc") {
  std::uniform_int_distribution<size_t> d(0, alphabet.size() - 1);
  std::u32string w;
  for (size_t i = 0; i < n; ++i) w += alphabet[d(rng)];
  return w;
}

inline LabeledSegmentation random_analysis(const Model& model,
                                           const std::u32string& word,
                                           std::mt19937_64& rng) {
  auto paths = all_paths(word.size(), model.max_len(word.size()),
                         model.num_labels());
  std::uniform_int_distribution<size_t> d(0, paths.size() - 1);
  return to_segmentation(model, word, paths[d(rng)]);
}

/// Per-word nll computed from enumeration, for finite differences.
inline double nll(const Model& model, const LabeledSegmentation& gold) {
  return enumerate(model, gold.word()).log_z - lmseg::score(model, gold);
}

}  // namespace oracle
