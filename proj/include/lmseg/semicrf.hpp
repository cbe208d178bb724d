#pragma once

// Exact inference over the labeled-segmentation lattice of one word.
//
// A segment starting at `start` with length `len` and label y, preceded by
// label y' (or BEGIN when start == 0), has log-potential
//   phi = unary(start, len, y) + trans(y', y).
// All recursions run in log space.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "lmseg/error.hpp"
#include "lmseg/features.hpp"
#include "lmseg/morphotags.hpp"

namespace lmseg {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  if (a < b) std::swap(a, b);
  return a + std::log1p(std::exp(b - a));
}

/// Learned weights plus everything needed to featurize and decode.
struct Model {
  FeatureConfig features;
  Tagset tagset;
  FeatureVocabulary vocab;
  std::vector<double> weights;
  Resources resources;

  size_t num_labels() const { return tagset.size(); }

  /// Effective maximum segment length for a word of length n.
  size_t max_len(size_t n) const {
    return features.max_segment_length == 0
               ? n
               : std::min(n, static_cast<size_t>(features.max_segment_length));
  }

  /// Vocabulary index of TRANS:<prev>:<label>, row 0 being BEGIN; -1 when
  /// the transition was never observed.
  std::vector<int64_t> transition_indices() const {
    const size_t L = num_labels();
    std::vector<int64_t> out((L + 1) * L, -1);
    for (size_t p = 0; p <= L; ++p) {
      std::string_view prev = p == 0 ? kBeginLabel : std::string_view(tagset.name(p - 1));
      for (size_t y = 0; y < L; ++y) {
        if (auto i = vocab.find(transition_feature(prev, tagset.name(y)))) {
          out[p * L + y] = *i;
        }
      }
    }
    return out;
  }

  /// Label index of `tag`; throws DataError when it is not in the tagset.
  size_t label_of(const MorphTag& tag) const {
    auto i = tagset.index_of(tag);
    if (!i) {
      throw DataError("label '" + tag.to_string() + "' is not in the level-" +
                      std::to_string(tagset.level().value()) + " tagset");
    }
    return *i;
  }
};

/// Log-potentials of one word, materialized once and shared by forward,
/// backward, Viterbi and the gradient.
struct Potentials {
  size_t n = 0;  // word length
  size_t m = 0;  // max segment length
  size_t L = 0;  // labels
  std::vector<double> unary;  // [(start * m + len - 1) * L + y]
  std::vector<double> trans;  // [(prev + 1) * L + y], prev = -1 is BEGIN

  Potentials() = default;
  Potentials(size_t n_, size_t m_, size_t L_)
      : n(n_), m(m_), L(L_), unary(n_ * m_ * L_, 0.0), trans((L_ + 1) * L_, 0.0) {}

  size_t span(size_t start, size_t len) const { return start * m + len - 1; }
  bool valid(size_t start, size_t len) const {
    return len >= 1 && len <= m && start + len <= n;
  }
  double& u(size_t start, size_t len, size_t y) {
    return unary[span(start, len) * L + y];
  }
  double u(size_t start, size_t len, size_t y) const {
    return unary[span(start, len) * L + y];
  }
  /// prev == L denotes BEGIN.
  double t(size_t prev, size_t y) const {
    return trans[(prev == L ? 0 : prev + 1) * L + y];
  }
  double phi(size_t start, size_t len, size_t y, size_t prev) const {
    return u(start, len, y) + t(prev, y);
  }
};

/// Forward/backward tables; alpha(n, y) sums paths whose last segment ends
/// at n with label y, beta(n, y) sums completions after such a path.
/// into(s, y) sums prefixes followed by a transition into a y-segment that
/// starts at s; out(s, y) sums the y-segments starting at s together with
/// their completions.
struct Chart {
  size_t n = 0;
  size_t L = 0;
  std::vector<double> alpha;  // [(pos) * L + y]
  std::vector<double> beta;
  std::vector<double> into_;
  std::vector<double> out_;
  double log_z = kNegInf;
  double log_z_backward = kNegInf;

  double a(size_t pos, size_t y) const { return alpha[pos * L + y]; }
  double b(size_t pos, size_t y) const { return beta[pos * L + y]; }
  double into(size_t pos, size_t y) const { return into_[pos * L + y]; }
  double out(size_t pos, size_t y) const { return out_[pos * L + y]; }
};

/// log(sum(exp(v))) with max shifting.
inline double log_sum_exp(const double* v, size_t k) {
  double mx = kNegInf;
  for (size_t i = 0; i < k; ++i) mx = std::max(mx, v[i]);
  if (mx == kNegInf) return kNegInf;
  if (mx == std::numeric_limits<double>::infinity()) return mx;
  double s = 0.0;
  for (size_t i = 0; i < k; ++i) s += std::exp(v[i] - mx);
  return mx + std::log(s);
}

/// Cached feature indices of every (span, label) cell of one word under a
/// frozen vocabulary.
class WordLattice {
 public:
  WordLattice(const Model& model, std::u32string word)
      : word_(std::move(word)),
        n_(word_.size()),
        m_(model.max_len(word_.size())),
        L_(model.num_labels()) {
    if (n_ == 0) throw DataError("empty word");
    offsets_.assign(n_ * m_ * L_ + 1, 0);
    std::vector<uint32_t> tmp;
    for (size_t start = 0; start < n_; ++start) {
      for (size_t len = 1; len <= m_; ++len) {
        const bool ok = start + len <= n_;
        std::vector<std::string> obs;
        if (ok) {
          obs = span_observations(word_, start, start + len, model.features,
                                  model.resources);
        }
        for (size_t y = 0; y < L_; ++y) {
          const size_t cell = (start * m_ + len - 1) * L_ + y;
          if (ok) {
            tmp.clear();
            const std::string& label = model.tagset.name(y);
            for (const auto& o : obs) {
              if (auto i = model.vocab.find(conjoin(o, label))) tmp.push_back(*i);
            }
            if (model.features.use_conjunction) {
              if (auto i = model.vocab.find(conjunction_feature(
                      word_.substr(start, len), label))) {
                tmp.push_back(*i);
              }
            }
            std::sort(tmp.begin(), tmp.end());
            tmp.erase(std::unique(tmp.begin(), tmp.end()), tmp.end());
            feats_.insert(feats_.end(), tmp.begin(), tmp.end());
          }
          offsets_[cell + 1] = feats_.size();
        }
      }
    }
    trans_ = model.transition_indices();
  }

  const std::u32string& word() const { return word_; }
  size_t length() const { return n_; }
  size_t max_len() const { return m_; }
  size_t labels() const { return L_; }

  std::span<const uint32_t> unary_features(size_t start, size_t len,
                                           size_t y) const {
    const size_t cell = (start * m_ + len - 1) * L_ + y;
    return {feats_.data() + offsets_[cell], offsets_[cell + 1] - offsets_[cell]};
  }
  /// prev == labels() denotes BEGIN; -1 when no feature exists.
  int64_t transition_feature_index(size_t prev, size_t y) const {
    return trans_[(prev == L_ ? 0 : prev + 1) * L_ + y];
  }

  Potentials potentials(std::span<const double> w) const {
    Potentials pot(n_, m_, L_);
    for (size_t start = 0; start < n_; ++start) {
      for (size_t len = 1; len <= m_; ++len) {
        for (size_t y = 0; y < L_; ++y) {
          double s = 0.0;
          if (start + len <= n_) {
            for (uint32_t f : unary_features(start, len, y)) s += w[f];
          } else {
            s = kNegInf;
          }
          pot.u(start, len, y) = s;
        }
      }
    }
    for (size_t i = 0; i < trans_.size(); ++i) {
      pot.trans[i] = trans_[i] >= 0 ? w[static_cast<size_t>(trans_[i])] : 0.0;
    }
    return pot;
  }

 private:
  std::u32string word_;
  size_t n_, m_, L_;
  std::vector<size_t> offsets_;
  std::vector<uint32_t> feats_;
  std::vector<int64_t> trans_;
};

/// Alpha recursion; alpha(0, y) is 0 for every y but paths leave position 0
/// only through the BEGIN transition.
inline Chart forward(const Potentials& pot) {
  const size_t n = pot.n, L = pot.L;
  Chart c;
  c.n = n;
  c.L = L;
  c.alpha.assign((n + 1) * L, kNegInf);
  c.beta.assign((n + 1) * L, kNegInf);
  c.into_.assign(n * L, kNegInf);
  for (size_t y = 0; y < L; ++y) c.alpha[y] = 0.0;
  std::vector<double> buf(std::max(L, pot.m));
  for (size_t y = 0; y < L; ++y) c.into_[y] = pot.t(L, y);
  for (size_t end = 1; end <= n; ++end) {
    for (size_t y = 0; y < L; ++y) {
      const size_t lmax = std::min(pot.m, end);
      for (size_t len = 1; len <= lmax; ++len) {
        const size_t start = end - len;
        buf[len - 1] = c.into(start, y) + pot.u(start, len, y);
      }
      c.alpha[end * L + y] = log_sum_exp(buf.data(), lmax);
    }
    if (end < n) {
      for (size_t y = 0; y < L; ++y) {
        for (size_t p = 0; p < L; ++p) buf[p] = c.a(end, p) + pot.t(p, y);
        c.into_[end * L + y] = log_sum_exp(buf.data(), L);
      }
    }
  }
  c.log_z = log_sum_exp(c.alpha.data() + n * L, L);
  return c;
}

/// Beta recursion from the word end; also sets log_z_backward.
inline void backward(const Potentials& pot, Chart& c) {
  const size_t n = pot.n, L = pot.L;
  c.beta.assign((n + 1) * L, kNegInf);
  c.out_.assign(n * L, kNegInf);
  std::vector<double> buf(std::max(L, pot.m));
  for (size_t y = 0; y < L; ++y) c.beta[n * L + y] = 0.0;
  for (size_t pos = n; pos-- > 0;) {
    for (size_t y = 0; y < L; ++y) {
      const size_t lmax = std::min(pot.m, n - pos);
      for (size_t len = 1; len <= lmax; ++len) {
        buf[len - 1] = pot.u(pos, len, y) + c.b(pos + len, y);
      }
      c.out_[pos * L + y] = log_sum_exp(buf.data(), lmax);
    }
    if (pos == 0) break;
    for (size_t p = 0; p < L; ++p) {
      for (size_t y = 0; y < L; ++y) buf[y] = pot.t(p, y) + c.out(pos, y);
      c.beta[pos * L + p] = log_sum_exp(buf.data(), L);
    }
  }
  for (size_t y = 0; y < L; ++y) buf[y] = pot.t(L, y) + c.out(0, y);
  c.log_z_backward = log_sum_exp(buf.data(), L);
}

inline Chart forward_backward(const Potentials& pot) {
  Chart c = forward(pot);
  backward(pot, c);
  return c;
}

/// Posterior probability of each (span, previous label, label) cell.
struct Marginals {
  size_t n = 0, m = 0, L = 0;
  std::vector<double> p;  // [((start * m + len - 1) * (L + 1) + prev) * L + y]

  /// prev == L denotes BEGIN.
  double at(size_t start, size_t len, size_t prev, size_t y) const {
    return p[((start * m + len - 1) * (L + 1) + prev) * L + y];
  }
  /// Probability that word[start, start+len) is a segment labeled y.
  double segment(size_t start, size_t len, size_t y) const {
    double s = 0.0;
    for (size_t prev = 0; prev <= L; ++prev) s += at(start, len, prev, y);
    return s;
  }
};

inline Marginals marginals(const Potentials& pot, const Chart& c) {
  Marginals mg;
  mg.n = pot.n;
  mg.m = pot.m;
  mg.L = pot.L;
  const size_t L = pot.L;
  mg.p.assign(pot.n * pot.m * (L + 1) * L, 0.0);
  for (size_t start = 0; start < pot.n; ++start) {
    for (size_t len = 1; len <= pot.m && start + len <= pot.n; ++len) {
      for (size_t y = 0; y < L; ++y) {
        const double after = c.b(start + len, y);
        auto put = [&](size_t prev, double before) {
          double lp = before + pot.phi(start, len, y, prev) + after - c.log_z;
          mg.p[((start * pot.m + len - 1) * (L + 1) + prev) * L + y] =
              lp == kNegInf ? 0.0 : std::exp(lp);
        };
        if (start == 0) {
          put(L, 0.0);
        } else {
          for (size_t prev = 0; prev < L; ++prev) put(prev, c.a(start, prev));
        }
      }
    }
  }
  return mg;
}

/// One segment of a decoded path.
struct PathStep {
  size_t start;
  size_t len;
  size_t label;
  bool operator==(const PathStep&) const = default;
};

struct Decoded {
  std::vector<PathStep> path;
  double score = kNegInf;
};

/// Max-scoring labeled segmentation. Ties go to fewer segments, then the
/// lexicographically smallest label sequence, then the lexicographically
/// smallest segment-length sequence.
inline Decoded viterbi(const Potentials& pot) {
  const size_t n = pot.n, L = pot.L;
  struct Cell {
    double score = kNegInf;
    size_t segs = 0;
    size_t start = 0;  // start of last segment
    size_t prev = 0;   // label before it (L = BEGIN)
  };
  std::vector<Cell> best((n + 1) * L);

  auto trace = [&](size_t end, size_t y) {
    std::vector<PathStep> rev;
    while (true) {
      const Cell& c = best[end * L + y];
      rev.push_back({c.start, end - c.start, y});
      if (c.start == 0) break;
      end = c.start;
      y = c.prev;
    }
    std::reverse(rev.begin(), rev.end());
    return rev;
  };
  auto path_less = [](const std::vector<PathStep>& x,
                      const std::vector<PathStep>& z) {
    for (size_t i = 0; i < x.size(); ++i) {
      if (x[i].label != z[i].label) return x[i].label < z[i].label;
    }
    for (size_t i = 0; i < x.size(); ++i) {
      if (x[i].len != z[i].len) return x[i].len < z[i].len;
    }
    return false;
  };
  // Paths into (end, y) via candidate (start, prev) vs the incumbent.
  auto better = [&](size_t end, size_t y, const Cell& cand, const Cell& inc) {
    if (inc.score == kNegInf) return cand.score != kNegInf;
    if (cand.score != inc.score) return cand.score > inc.score;
    if (cand.segs != inc.segs) return cand.segs < inc.segs;
    std::vector<PathStep> a, b;
    if (cand.start > 0) a = trace(cand.start, cand.prev);
    a.push_back({cand.start, end - cand.start, y});
    if (inc.start > 0) b = trace(inc.start, inc.prev);
    b.push_back({inc.start, end - inc.start, y});
    return path_less(a, b);
  };

  for (size_t end = 1; end <= n; ++end) {
    for (size_t y = 0; y < L; ++y) {
      Cell& slot = best[end * L + y];
      for (size_t len = 1; len <= std::min(pot.m, end); ++len) {
        const size_t start = end - len;
        if (start == 0) {
          Cell cand{pot.phi(0, len, y, L), 1, 0, L};
          if (better(end, y, cand, slot)) slot = cand;
          continue;
        }
        for (size_t p = 0; p < L; ++p) {
          const Cell& before = best[start * L + p];
          if (before.score == kNegInf) continue;
          Cell cand{before.score + pot.phi(start, len, y, p), before.segs + 1,
                    start, p};
          if (better(end, y, cand, slot)) slot = cand;
        }
      }
    }
  }

  size_t arg = 0;
  for (size_t y = 1; y < L; ++y) {
    const Cell& c = best[n * L + y];
    const Cell& inc = best[n * L + arg];
    bool take = false;
    if (c.score != inc.score) {
      take = c.score > inc.score;
    } else if (c.segs != inc.segs) {
      take = c.segs < inc.segs;
    } else {
      take = path_less(trace(n, y), trace(n, arg));
    }
    if (take) arg = y;
  }
  Decoded d;
  d.score = best[n * L + arg].score;
  d.path = trace(n, arg);
  return d;
}

// ---------------------------------------------------------------------------
// Model-level operations

inline Potentials potentials(const Model& model, const std::u32string& word) {
  WordLattice lat(model, word);
  return lat.potentials(model.weights);
}

inline Chart forward(const Model& model, const std::u32string& word) {
  return forward(potentials(model, word));
}

inline Chart backward(const Model& model, const std::u32string& word) {
  return forward_backward(potentials(model, word));
}

inline Marginals marginals(const Model& model, const std::u32string& word) {
  Potentials pot = potentials(model, word);
  Chart c = forward_backward(pot);
  return marginals(pot, c);
}

inline LabeledSegmentation path_to_segmentation(const Model& model,
                                                const std::u32string& word,
                                                const std::vector<PathStep>& path) {
  std::vector<Segment> segs;
  for (const auto& s : path) {
    segs.push_back({word.substr(s.start, s.len), model.tagset.at(s.label)});
  }
  return LabeledSegmentation(word, std::move(segs));
}

struct Prediction {
  LabeledSegmentation analysis;
  double score = kNegInf;
};

inline Prediction viterbi(const Model& model, const std::u32string& word) {
  Decoded d = viterbi(potentials(model, word));
  return {path_to_segmentation(model, word, d.path), d.score};
}

/// Unnormalized log-score of an analysis, computed straight from the
/// feature templates. log p = score - log Z.
inline double score(const Model& model, const LabeledSegmentation& ls) {
  const size_t m = model.max_len(ls.word().size());
  double s = 0.0;
  size_t pos = 0;
  std::string prev(kBeginLabel);
  for (const auto& seg : ls.segments()) {
    if (seg.text.size() > m) {
      throw DataError("segment '" + to_utf8(seg.text) +
                      "' exceeds the maximum segment length " +
                      std::to_string(m) +
                      "; raise --max-seg or drop the instance");
    }
    const std::string& label = model.tagset.name(model.label_of(seg.tag));
    SparseVector v = featurize(ls.word(), pos, pos + seg.text.size(), label,
                               prev, model.features, model.resources,
                               static_cast<const FeatureVocabulary&>(model.vocab));
    s += v.dot(model.weights);
    prev = label;
    pos += seg.text.size();
  }
  return s;
}

/// The gold analysis as a lattice path; throws when a segment exceeds the
/// maximum length or a label is outside the tagset.
inline std::vector<PathStep> gold_path(const Model& model,
                                       const LabeledSegmentation& gold) {
  const size_t m = model.max_len(gold.word().size());
  std::vector<PathStep> path;
  size_t pos = 0;
  for (const auto& seg : gold.segments()) {
    if (seg.text.size() > m) {
      throw DataError("gold segment '" + to_utf8(seg.text) + "' of '" +
                      to_utf8(gold.word()) +
                      "' exceeds the maximum segment length " +
                      std::to_string(m) +
                      "; raise --max-seg or drop the instance");
    }
    path.push_back({pos, seg.text.size(), model.label_of(seg.tag)});
    pos += seg.text.size();
  }
  return path;
}

inline double path_score(const Potentials& pot, const std::vector<PathStep>& path) {
  double s = 0.0;
  size_t prev = pot.L;
  for (const auto& st : path) {
    s += pot.phi(st.start, st.len, st.label, prev);
    prev = st.label;
  }
  return s;
}

/// Adds scale * (feature counts of `path`) into grad.
inline void add_path_counts(const WordLattice& lat,
                            const std::vector<PathStep>& path, double scale,
                            std::span<double> grad) {
  size_t prev = lat.labels();
  for (const auto& st : path) {
    for (uint32_t f : lat.unary_features(st.start, st.len, st.label)) {
      grad[f] += scale;
    }
    int64_t t = lat.transition_feature_index(prev, st.label);
    if (t >= 0) grad[static_cast<size_t>(t)] += scale;
    prev = st.label;
  }
}

/// Adds scale * (expected feature counts) into grad.
inline void add_expected_counts(const WordLattice& lat, const Potentials& pot,
                                const Chart& c, double scale,
                                std::span<double> grad) {
  const size_t n = pot.n, L = pot.L;
  for (size_t start = 0; start < n; ++start) {
    for (size_t y = 0; y < L; ++y) {
      const double in = c.into(start, y) - c.log_z;
      if (in == kNegInf) continue;
      for (size_t len = 1; len <= pot.m && start + len <= n; ++len) {
        const double lp = in + pot.u(start, len, y) + c.b(start + len, y);
        if (lp == kNegInf) continue;
        const double pr = scale * std::exp(lp);
        for (uint32_t f : lat.unary_features(start, len, y)) grad[f] += pr;
      }
    }
    for (size_t y = 0; y < L; ++y) {
      const double rest = c.out(start, y) - c.log_z;
      if (rest == kNegInf) continue;
      auto edge = [&](size_t prev, double before) {
        int64_t t = lat.transition_feature_index(prev, y);
        if (t < 0) return;
        const double lp = before + pot.t(prev, y) + rest;
        if (lp == kNegInf) return;
        grad[static_cast<size_t>(t)] += scale * std::exp(lp);
      };
      if (start == 0) {
        edge(L, 0.0);
      } else {
        for (size_t p = 0; p < L; ++p) edge(p, c.a(start, p));
      }
    }
  }
}

struct GradientResult {
  double nll = 0.0;
  std::vector<double> grad;
};

/// Negative log-likelihood of `gold` and its gradient (expected minus
/// observed feature counts).
inline GradientResult gradient(const Model& model,
                               const LabeledSegmentation& gold) {
  WordLattice lat(model, gold.word());
  std::vector<PathStep> path = gold_path(model, gold);
  Potentials pot = lat.potentials(model.weights);
  Chart c = forward_backward(pot);
  GradientResult r;
  r.nll = c.log_z - path_score(pot, path);
  r.grad.assign(model.weights.size(), 0.0);
  add_expected_counts(lat, pot, c, 1.0, r.grad);
  add_path_counts(lat, path, -1.0, r.grad);
  return r;
}

}  // namespace lmseg
