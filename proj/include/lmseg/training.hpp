#pragma once

// L2-regularized maximum-likelihood training of the semi-CRF, the tuning
// grid search and the final-train protocol.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "lmseg/corpus.hpp"
#include "lmseg/error.hpp"
#include "lmseg/evaluation.hpp"
#include "lmseg/features.hpp"
#include "lmseg/optimize.hpp"
#include "lmseg/semicrf.hpp"

namespace lmseg {

struct TrainConfig {
  double l2 = 0.1;
  size_t lbfgs_history = 10;
  size_t max_iterations = 500;
  double tolerance = 1e-6;
  uint64_t seed = 0;
  int level = 2;
  FeatureConfig features;
  /// Supervise with the sum over all gold analyses instead of the first.
  bool marginalize_golds = false;
  size_t threads = 1;

  void validate() const {
    if (!(l2 >= 0.0)) throw ParseError("l2 coefficient must be >= 0");
    if (!(tolerance > 0.0)) throw ParseError("tolerance must be > 0");
    if (threads == 0) throw ParseError("thread count must be >= 1");
    TagsetLevel check(level);
    (void)check;
    features.validate();
  }
};

struct TrainLog {
  struct Row {
    size_t iteration;
    double objective;
    double grad_norm;
  };
  std::vector<Row> rows;
  double seconds = 0.0;
  bool converged = false;

  void write(std::ostream& out) const {
    char buf[128];
    for (const auto& r : rows) {
      std::snprintf(buf, sizeof buf, "%zu\t%.10g\t%.6g\n", r.iteration,
                    r.objective, r.grad_norm);
      out << buf;
    }
  }
};

namespace detail {

/// Supervision targets of one entry, projected to the training level.
inline std::vector<LabeledSegmentation> targets(const Entry& e,
                                                const TrainConfig& cfg) {
  std::vector<LabeledSegmentation> out;
  const TagsetLevel level(cfg.level);
  for (const auto& g : e.golds) {
    LabeledSegmentation p = g.projected(level);
    if (std::find(out.begin(), out.end(), p) == out.end()) out.push_back(p);
    if (!cfg.marginalize_golds) break;
  }
  return out;
}

}  // namespace detail

/// Tagset and frozen feature vocabulary induced from the supervision
/// targets of `train`; weights start at zero.
inline Model build_model(const Dataset& train, const TrainConfig& cfg,
                         const Resources& resources) {
  cfg.validate();
  Model model;
  model.features = cfg.features;
  model.resources = resources;
  std::vector<LabeledSegmentation> all;
  for (const auto& e : train.entries()) {
    for (auto& t : detail::targets(e, cfg)) all.push_back(std::move(t));
  }
  model.tagset = build_tagset(all, TagsetLevel(cfg.level));
  for (const auto& ls : all) {
    const size_t m = model.max_len(ls.word().size());
    size_t pos = 0;
    std::string prev(kBeginLabel);
    for (const auto& seg : ls.segments()) {
      if (seg.text.size() > m) {
        throw DataError("gold segment '" + to_utf8(seg.text) + "' of '" +
                        to_utf8(ls.word()) +
                        "' exceeds the maximum segment length " +
                        std::to_string(m) +
                        "; raise --max-seg or drop the instance");
      }
      const std::string label = seg.tag.to_string();
      featurize(ls.word(), pos, pos + seg.text.size(), label, prev,
                model.features, model.resources, model.vocab);
      prev = label;
      pos += seg.text.size();
    }
  }
  model.vocab.freeze();
  model.weights.assign(model.vocab.size(), 0.0);
  return model;
}

/// Regularized negative log-likelihood over a prepared training set.
class Objective {
 public:
  Objective(const Model& model, const Dataset& train, const TrainConfig& cfg)
      : l2_(cfg.l2), threads_(std::max<size_t>(1, cfg.threads)),
        dim_(model.vocab.size()) {
    for (const auto& e : train.entries()) {
      lattices_.emplace_back(model, e.word);
      std::vector<std::vector<PathStep>> paths;
      for (const auto& t : detail::targets(e, cfg)) {
        paths.push_back(gold_path(model, t));
      }
      paths_.push_back(std::move(paths));
    }
  }

  size_t dimension() const { return dim_; }
  size_t size() const { return lattices_.size(); }

  /// Value at w; gradient written into g (resized to the dimension).
  double operator()(const std::vector<double>& w, std::vector<double>& g) const {
    g.assign(dim_, 0.0);
    const size_t blocks = std::min(threads_, std::max<size_t>(1, lattices_.size()));
    std::vector<double> values(blocks, 0.0);
    std::vector<std::vector<double>> grads(blocks);
    std::vector<std::string> errors(blocks);

    auto work = [&](size_t b) {
      std::vector<double>& gb = b == 0 ? g : grads[b];
      if (b != 0) gb.assign(dim_, 0.0);
      const size_t lo = lattices_.size() * b / blocks;
      const size_t hi = lattices_.size() * (b + 1) / blocks;
      for (size_t i = lo; i < hi; ++i) {
        double nll = word_term(i, w, gb);
        if (!std::isfinite(nll)) {
          errors[b] = "non-finite objective at word '" +
                      to_utf8(lattices_[i].word()) + "' (" +
                      std::to_string(dim_) + " features)";
          return;
        }
        values[b] += nll;
      }
    };
    if (blocks == 1) {
      work(0);
    } else {
      std::vector<std::thread> pool;
      for (size_t b = 0; b < blocks; ++b) pool.emplace_back(work, b);
      for (auto& t : pool) t.join();
    }
    for (const auto& e : errors) {
      if (!e.empty()) throw NumericError(e);
    }
    double value = values[0];
    for (size_t b = 1; b < blocks; ++b) {
      value += values[b];
      for (size_t k = 0; k < dim_; ++k) g[k] += grads[b][k];
    }
    double sq = 0.0;
    for (size_t k = 0; k < dim_; ++k) {
      sq += w[k] * w[k];
      g[k] += l2_ * w[k];
    }
    value += 0.5 * l2_ * sq;
    if (!std::isfinite(value)) {
      throw NumericError("non-finite objective (" + std::to_string(dim_) +
                         " features)");
    }
    return value;
  }

 private:
  double word_term(size_t i, const std::vector<double>& w,
                   std::vector<double>& g) const {
    const WordLattice& lat = lattices_[i];
    Potentials pot = lat.potentials(w);
    Chart c = forward_backward(pot);
    add_expected_counts(lat, pot, c, 1.0, g);
    const auto& paths = paths_[i];
    if (paths.size() == 1) {
      add_path_counts(lat, paths[0], -1.0, g);
      return c.log_z - path_score(pot, paths[0]);
    }
    std::vector<double> s;
    double lse = kNegInf;
    for (const auto& p : paths) {
      s.push_back(path_score(pot, p));
      lse = log_add(lse, s.back());
    }
    for (size_t k = 0; k < paths.size(); ++k) {
      add_path_counts(lat, paths[k], -std::exp(s[k] - lse), g);
    }
    return c.log_z - lse;
  }

  double l2_;
  size_t threads_;
  size_t dim_;
  std::vector<WordLattice> lattices_;
  std::vector<std::vector<std::vector<PathStep>>> paths_;
};

/// Objective value and gradient of `train` at `weights` under `model`'s
/// vocabulary.
inline double objective(const Model& model, const std::vector<double>& weights,
                        const Dataset& train, const TrainConfig& cfg,
                        std::vector<double>& grad) {
  Objective obj(model, train, cfg);
  return obj(weights, grad);
}

inline Model fit(const Dataset& train, const TrainConfig& cfg,
                 const Resources& resources, TrainLog* log = nullptr) {
  if (train.empty()) throw DataError("training set is empty");
  auto t0 = std::chrono::steady_clock::now();
  Model model = build_model(train, cfg, resources);
  Objective obj(model, train, cfg);
  LbfgsOptions opt;
  opt.history = cfg.lbfgs_history;
  opt.max_iterations = cfg.max_iterations;
  opt.tolerance = cfg.tolerance;
  if (log) {
    opt.on_iteration = [log](size_t it, double f, double gn) {
      log->rows.push_back({it, f, gn});
    };
  }
  std::vector<double> w(model.vocab.size(), 0.0);
  LbfgsResult r = minimize(obj, w, opt);
  for (double v : w) {
    if (!std::isfinite(v)) throw NumericError("non-finite weight after training");
  }
  model.weights = std::move(w);
  if (log) {
    log->converged = r.converged;
    log->seconds = std::chrono::duration<double>(
                       std::chrono::steady_clock::now() - t0)
                       .count();
  }
  return model;
}

/// One-best analyses for every word of `data`.
inline Predictions predict_all(const Model& model, const Dataset& data) {
  Predictions out;
  for (const auto& e : data.entries()) {
    out.emplace(e.word, viterbi(model, e.word).analysis);
  }
  return out;
}

enum class TuneMetric { SegF1, StemAcc, TagAcc };

inline TuneMetric parse_metric(std::string_view s) {
  if (s == "seg_f1") return TuneMetric::SegF1;
  if (s == "stem_acc") return TuneMetric::StemAcc;
  if (s == "tag_acc") return TuneMetric::TagAcc;
  throw ParseError("unknown metric '" + std::string(s) + "'");
}

/// Metric of `model` on `data`; -infinity when the model's level is too
/// coarse for the metric (stem needs 2, tags need 4).
inline double metric_value(const Model& model, const Dataset& data,
                           TuneMetric metric) {
  const int level = model.tagset.level().value();
  if ((metric == TuneMetric::StemAcc && level < 2) ||
      (metric == TuneMetric::TagAcc && level < 4)) {
    return -std::numeric_limits<double>::infinity();
  }
  Predictions preds = predict_all(model, data);
  switch (metric) {
    case TuneMetric::SegF1:
      return macro_f1(preds, data).get("f1");
    case TuneMetric::StemAcc:
      return stem_and_root_accuracy(preds, data).stem_accuracy;
    case TuneMetric::TagAcc:
      return tag_classification_metrics(preds, data, model.tagset.level())
          .full_tag_accuracy;
  }
  return 0.0;
}

struct TuneGrid {
  std::vector<double> l2{0.1};
  std::vector<int> ngram{3};
  std::vector<int> level{2};
  std::vector<bool> affix{false};
  std::vector<bool> dict{false};
  std::vector<bool> lsv{false};

  size_t cells() const {
    return l2.size() * ngram.size() * level.size() * affix.size() *
           dict.size() * lsv.size();
  }
};

/// Reads `axis<TAB>value<TAB>value...` rows; axes l2, ngram, level, affix,
/// dict, lsv (booleans as 0/1). Missing axes keep `base`'s setting.
inline TuneGrid load_grid(std::istream& in, const TrainConfig& base) {
  TuneGrid g;
  g.l2 = {base.l2};
  g.ngram = {base.features.max_context_ngram};
  g.level = {base.level};
  g.affix = {base.features.use_affix};
  g.dict = {base.features.use_dict};
  g.lsv = {base.features.use_lsv};
  std::string raw;
  size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    auto fields = split(line, '\t');
    std::string axis(trim(fields[0]));
    if (fields.size() < 2) {
      throw ParseError("grid line " + std::to_string(line_no) + ": axis '" +
                       axis + "' has no values");
    }
    try {
      std::vector<std::string> vals;
      for (size_t i = 1; i < fields.size(); ++i) vals.emplace_back(trim(fields[i]));
      auto bools = [&] {
        std::vector<bool> out;
        for (auto& v : vals) out.push_back(std::stoi(v) != 0);
        return out;
      };
      if (axis == "l2") {
        g.l2.clear();
        for (auto& v : vals) g.l2.push_back(std::stod(v));
      } else if (axis == "ngram") {
        g.ngram.clear();
        for (auto& v : vals) g.ngram.push_back(std::stoi(v));
      } else if (axis == "level") {
        g.level.clear();
        for (auto& v : vals) g.level.push_back(TagsetLevel(std::stoi(v)).value());
      } else if (axis == "affix") {
        g.affix = bools();
      } else if (axis == "dict") {
        g.dict = bools();
      } else if (axis == "lsv") {
        g.lsv = bools();
      } else {
        throw ParseError("unknown axis '" + axis + "'");
      }
    } catch (const std::logic_error&) {
      throw ParseError("grid line " + std::to_string(line_no) +
                       ": bad value for axis '" + axis + "'");
    }
  }
  if (g.cells() == 0) throw ParseError("tuning grid is empty");
  return g;
}

struct TuneCell {
  TrainConfig config;
  std::vector<double> fold_scores;
  double mean = 0.0;
};

struct TuneResult {
  TrainConfig best;
  std::vector<TuneCell> cells;

  std::string to_tsv() const {
    std::ostringstream out;
    out << "level\tl2\tngram\taffix\tdict\tlsv\tmean";
    size_t folds = cells.empty() ? 0 : cells.front().fold_scores.size();
    for (size_t f = 0; f < folds; ++f) out << "\tfold" << f;
    out << '\n';
    char buf[64];
    for (const auto& c : cells) {
      out << c.config.level << '\t' << c.config.l2 << '\t'
          << c.config.features.max_context_ngram << '\t'
          << c.config.features.use_affix << '\t' << c.config.features.use_dict
          << '\t' << c.config.features.use_lsv;
      std::snprintf(buf, sizeof buf, "\t%.6f", c.mean);
      out << buf;
      for (double s : c.fold_scores) {
        std::snprintf(buf, sizeof buf, "\t%.6f", s);
        out << buf;
      }
      out << '\n';
    }
    return out.str();
  }
};

/// Trains every grid cell on each fold's Train slice and scores it on the
/// fold's Tune slice. The best mean wins; ties prefer the smaller level,
/// then the smaller l2, then the smaller n-gram length.
inline TuneResult tune(const std::vector<Fold>& folds, const TuneGrid& grid,
                       TuneMetric metric, const TrainConfig& base,
                       const Resources& resources) {
  if (grid.cells() == 0) throw ParseError("tuning grid is empty");
  if (folds.empty()) throw DataError("no folds to tune on");
  TuneResult res;
  for (int level : grid.level) {
    for (double l2 : grid.l2) {
      for (int k : grid.ngram) {
        for (bool affix : grid.affix) {
          for (bool dict : grid.dict) {
            for (bool lsv : grid.lsv) {
              TuneCell cell;
              cell.config = base;
              cell.config.level = level;
              cell.config.l2 = l2;
              cell.config.features.max_context_ngram = k;
              cell.config.features.use_affix = affix;
              cell.config.features.use_dict = dict;
              cell.config.features.use_lsv = lsv;
              double sum = 0.0;
              for (const auto& fold : folds) {
                Model m = fit(fold.train, cell.config, resources);
                double v = metric_value(m, fold.tune, metric);
                cell.fold_scores.push_back(v);
                sum += v;
              }
              cell.mean = sum / static_cast<double>(folds.size());
              res.cells.push_back(std::move(cell));
            }
          }
        }
      }
    }
  }
  const TuneCell* best = &res.cells.front();
  for (const auto& c : res.cells) {
    auto key = [](const TuneCell& x) {
      return std::tuple(-x.mean, x.config.level, x.config.l2,
                        x.config.features.max_context_ngram);
    };
    if (key(c) < key(*best)) best = &c;
  }
  res.best = best->config;
  return res;
}

/// Fits on the concatenation of the three slices with a vocabulary built
/// from all of them.
inline Model train_final(const Dataset& train, const Dataset& tune_set,
                         const Dataset& dev, const TrainConfig& best,
                         const Resources& resources, TrainLog* log = nullptr) {
  Dataset all = concat({&train, &tune_set, &dev});
  return fit(all, best, resources, log);
}

}  // namespace lmseg
