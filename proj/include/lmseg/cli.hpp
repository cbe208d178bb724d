#pragma once

// Batch commands behind the command-line tool. Each takes a plain options
// struct and writes its human-readable summary to `out`.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "lmseg/baselines.hpp"
#include "lmseg/corpus.hpp"
#include "lmseg/error.hpp"
#include "lmseg/evaluation.hpp"
#include "lmseg/model_io.hpp"
#include "lmseg/synth.hpp"
#include "lmseg/training.hpp"

namespace lmseg::cli {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

/// Invalid flag value or flag combination.
class UsageError : public Error {
 public:
  using Error::Error;
};

inline Dataset read_corpus_file(const std::string& path, Role role,
                                const Normalization& norm = {}) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus '" + path + "'");
  try {
    return load_corpus(in, role, norm);
  } catch (const Error& e) {
    throw DataError(path + ": " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << text;
}

inline std::string fmt4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

inline size_t default_threads() {
  return std::max<size_t>(1, std::thread::hardware_concurrency());
}

// ---------------------------------------------------------------------------

struct TrainOptions {
  std::string train;
  std::string out;
  int level = 2;
  double l2 = 0.1;
  int ngram = 3;
  int max_seg = 12;
  std::string affix, dict, lsv;
  uint64_t seed = 0;
  size_t threads = 1;
  size_t max_iterations = 500;
  double tolerance = 1e-6;
  bool casefold = false;
  bool marginalize_golds = false;
  std::string log;
};

inline TrainConfig to_config(const TrainOptions& o) try {
  TrainConfig cfg;
  cfg.level = TagsetLevel(o.level).value();
  cfg.l2 = o.l2;
  cfg.features.max_context_ngram = o.ngram;
  cfg.features.max_segment_length = o.max_seg;
  cfg.features.use_affix = !o.affix.empty();
  cfg.features.use_dict = !o.dict.empty();
  cfg.features.use_lsv = !o.lsv.empty();
  cfg.seed = o.seed;
  cfg.threads = o.threads;
  cfg.max_iterations = o.max_iterations;
  cfg.tolerance = o.tolerance;
  cfg.marginalize_golds = o.marginalize_golds;
  cfg.validate();
  return cfg;
} catch (const ParseError& e) {
  throw UsageError(e.what());
}

inline int cmd_train(const TrainOptions& o, std::ostream& out) {
  const TrainConfig cfg = to_config(o);
  const Normalization norm{o.casefold};
  Dataset train = read_corpus_file(o.train, Role::Train, norm);
  Resources res = load_resources(o.affix, o.dict, o.lsv, norm);
  TrainLog log;
  Model model = fit(train, cfg, res, &log);
  save_model_file(o.out, model, cfg, norm);
  if (!o.log.empty()) {
    std::ostringstream s;
    log.write(s);
    write_text_file(o.log, s.str());
  }
  const double final_obj = log.rows.empty() ? 0.0 : log.rows.back().objective;
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "trained level-%d model on %zu words: %zu labels, %zu features, "
                "%zu iterations, objective %.6f, %.2fs%s\n",
                cfg.level, train.size(), model.tagset.size(), model.vocab.size(),
                log.rows.size(), final_obj, log.seconds,
                log.converged ? "" : " (not converged)");
  out << buf;
  return kOk;
}

// ---------------------------------------------------------------------------

struct MaxEntOptions {
  std::string train;
  std::string out;
  int level = 5;
  int ngram = 3;
  std::string regularizer = "L1";
  double coefficient = 0.1;
  bool split = false;
  bool casefold = false;
};

inline int cmd_maxent_train(const MaxEntOptions& o, std::ostream& out) {
  MaxEntConfig cfg;
  cfg.max_ngram = o.ngram;
  cfg.coefficient = o.coefficient;
  cfg.split_mode = o.split;
  if (o.regularizer == "L1") {
    cfg.regularizer = Regularizer::L1;
  } else if (o.regularizer == "L2") {
    cfg.regularizer = Regularizer::L2;
  } else {
    throw UsageError("regularizer must be L1 or L2");
  }
  Dataset train = read_corpus_file(o.train, Role::Train, Normalization{o.casefold});
  auto clf = maxent_train(tag_examples(train, TagsetLevel(o.level)), cfg);
  std::ofstream f(o.out, std::ios::binary);
  if (!f) throw DataError("cannot write '" + o.out + "'");
  save_maxent(f, clf, o.level);
  out << "trained MaxEnt" << (o.split ? "+Split" : "") << " on " << train.size()
      << " words: " << clf.classes.size() << " classes, " << clf.num_parameters()
      << " parameters\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct PredictOptions {
  std::string model;
  std::string input;
  std::string view = "lms";
};

inline std::string join(const std::vector<std::u32string>& parts) {
  std::string s;
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i) s += ' ';
    s += to_utf8(parts[i]);
  }
  return s;
}

inline void require_view_level(const std::string& view, int level) {
  if ((view == "stem" || view == "root") && level < 2) {
    throw GranularityError("view '" + view + "' needs a level >= 2 model (have " +
                           std::to_string(level) + ")");
  }
  if (view == "tag" && level < 4) {
    throw GranularityError("view 'tag' needs a level >= 4 model (have " +
                           std::to_string(level) + ")");
  }
}

inline std::string render_view(const LabeledSegmentation& ls,
                               const std::string& view) {
  if (view == "lms") return ls.to_string();
  if (view == "ums") return join(unlabeled_segments(ls));
  if (view == "stem") return to_utf8(stem_of(ls));
  if (view == "root") return join(root_segments(ls));
  if (view == "tag") return bundle_string(inflection_bundle(ls));
  throw UsageError("unknown view '" + view + "'");
}

inline int cmd_predict(const PredictOptions& o, std::ostream& out,
                       std::ostream& err = std::cerr) {
  static const std::set<std::string> views{"lms", "ums", "stem", "root", "tag"};
  if (!views.count(o.view)) throw UsageError("unknown view '" + o.view + "'");
  std::ifstream in(o.input);
  if (!in) throw DataError("cannot open input '" + o.input + "'");

  if (model_kind(o.model) == "maxent") {
    if (o.view != "tag") throw GranularityError("a MaxEnt model only supports view 'tag'");
    std::ifstream mf(o.model, std::ios::binary);
    SavedMaxEnt m = load_maxent(mf);
    Dataset words = load_word_list(in);
    for (const auto& e : words.entries()) {
      out << to_utf8(e.word) << '\t' << m.classifier.predict(e.word) << '\n';
    }
    return kOk;
  }

  SavedModel sm = load_model_file(o.model);
  for (const auto& w : sm.warnings) err << "warning: " << w << '\n';
  require_view_level(o.view, sm.model.tagset.level().value());
  Dataset words = load_word_list(in, sm.normalization);
  for (const auto& e : words.entries()) {
    const LabeledSegmentation ls = viterbi(sm.model, e.word).analysis;
    out << to_utf8(e.word) << '\t' << render_view(ls, o.view) << '\n';
  }
  return kOk;
}

// ---------------------------------------------------------------------------

struct EvaluateOptions {
  std::string model;
  std::string gold;
  std::string task = "seg";
  int underseg_level = -1;  // -1: the model's level
  std::string report;       // TSV
  std::string report_json;
  std::string matrix;
};

/// Scores a model on a gold corpus and prints a table for the task:
/// seg -> P/R/F1, stem|root -> root and stem accuracy, tag -> accuracy and
/// feature macro F1.
inline int cmd_evaluate(const EvaluateOptions& o, std::ostream& out,
                        std::ostream& err = std::cerr) {
  static const std::set<std::string> tasks{"seg", "stem", "root", "tag"};
  if (!tasks.count(o.task)) throw UsageError("unknown task '" + o.task + "'");
  EvalReport report;

  if (model_kind(o.model) == "maxent") {
    if (o.task != "tag") throw GranularityError("a MaxEnt model only supports task 'tag'");
    std::ifstream mf(o.model, std::ios::binary);
    SavedMaxEnt m = load_maxent(mf);
    Dataset gold = read_corpus_file(o.gold, Role::Test);
    BundlePredictions preds;
    for (const auto& e : gold.entries()) {
      std::string c = m.classifier.predict(e.word);
      std::vector<std::string> bundle;
      if (!c.empty()) {
        for (auto part : split(c, ':')) bundle.emplace_back(part);
      }
      preds.emplace(e.word, std::move(bundle));
    }
    TagMetrics tm = tag_classification_metrics(preds, gold, TagsetLevel(m.level));
    report.set("accuracy", tm.full_tag_accuracy);
    report.set("macro_f1", tm.feature_macro_f1);
    report.set("words", static_cast<double>(gold.size()));
    out << "task\tAcc.\tF1\n";
    out << "Tag\t" << fmt4(tm.full_tag_accuracy) << '\t' << fmt4(tm.feature_macro_f1) << '\n';
  } else {
    SavedModel sm = load_model_file(o.model);
    for (const auto& w : sm.warnings) err << "warning: " << w << '\n';
    const int level = sm.model.tagset.level().value();
    Dataset gold = read_corpus_file(o.gold, Role::Test, sm.normalization);
    if (o.task == "stem" || o.task == "root" || o.task == "tag") {
      require_view_level(o.task, level);
    }
    Predictions preds = predict_all(sm.model, gold);
    if (o.task == "seg") {
      report = macro_f1(preds, gold);
      out << "task\tP\tR\tF1\n";
      out << "UMS\t" << fmt4(report.get("precision")) << '\t'
          << fmt4(report.get("recall")) << '\t' << fmt4(report.get("f1")) << '\n';
    } else if (o.task == "stem" || o.task == "root") {
      StemRootAccuracy a = stem_and_root_accuracy(preds, gold);
      report.set("root_acc", a.root_accuracy);
      report.set("stem_acc", a.stem_accuracy);
      report.set("words", static_cast<double>(gold.size()));
      out << "task\tRoot Detection\tStemming\n";
      out << "Acc.\t" << fmt4(a.root_accuracy) << '\t' << fmt4(a.stem_accuracy) << '\n';
    } else {
      TagMetrics tm = tag_classification_metrics(preds, gold, sm.model.tagset.level());
      report.set("accuracy", tm.full_tag_accuracy);
      report.set("macro_f1", tm.feature_macro_f1);
      report.set("words", static_cast<double>(gold.size()));
      out << "task\tAcc.\tF1\n";
      out << "Tag\t" << fmt4(tm.full_tag_accuracy) << '\t' << fmt4(tm.feature_macro_f1) << '\n';
    }
    if (!o.matrix.empty()) {
      const int ul = o.underseg_level < 0 ? level : o.underseg_level;
      auto m = undersegmentation_matrix(preds, gold, TagsetLevel(ul));
      write_text_file(o.matrix, to_tsv(m));
      out << "missed boundaries: " << total(m) << '\n';
    }
  }
  if (!o.report.empty()) write_text_file(o.report, report.to_tsv());
  if (!o.report_json.empty()) write_text_file(o.report_json, report.to_json());
  return kOk;
}

// ---------------------------------------------------------------------------

struct TuneOptions {
  TrainOptions base;  // `train` is the corpus to fold
  size_t folds = 10;
  std::string grid;
  std::string metric = "seg_f1";
  std::string grid_out;
  std::string best_out;
};

inline int cmd_tune(const TuneOptions& o, std::ostream& out) {
  TuneMetric metric;
  try {
    metric = parse_metric(o.metric);
  } catch (const ParseError& e) {
    throw UsageError(e.what());
  }
  TrainConfig base = to_config(o.base);
  const Normalization norm{o.base.casefold};
  Dataset data = read_corpus_file(o.base.train, Role::Train, norm);
  std::ifstream gin(o.grid);
  if (!gin) throw DataError("cannot open grid '" + o.grid + "'");
  TuneGrid grid = load_grid(gin, base);
  if ((std::count(grid.affix.begin(), grid.affix.end(), true) && o.base.affix.empty()) ||
      (std::count(grid.dict.begin(), grid.dict.end(), true) && o.base.dict.empty()) ||
      (std::count(grid.lsv.begin(), grid.lsv.end(), true) && o.base.lsv.empty())) {
    throw UsageError("grid enables a resource that was not supplied");
  }
  Resources res = load_resources(o.base.affix, o.base.dict, o.base.lsv, norm);
  auto folds = split_folds(data, o.folds, o.base.seed);
  TuneResult r = tune(folds, grid, metric, base, res);
  const std::string tsv = r.to_tsv();
  if (!o.grid_out.empty()) write_text_file(o.grid_out, tsv);
  if (!o.best_out.empty()) write_text_file(o.best_out, to_json(r.best).dump(2) + "\n");
  out << tsv;
  out << "best: level " << r.best.level << ", l2 " << r.best.l2 << ", ngram "
      << r.best.features.max_context_ngram << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------

struct SynthOptions {
  std::string grammar;
  std::string dump_grammar;
  size_t n = 1200;
  int64_t seed = -1;  // -1: the grammar's seed
  std::string split = "8:1:1:2";
  std::string out_prefix;
};

inline std::vector<size_t> parse_ratio(const std::string& s) {
  std::vector<size_t> r;
  for (auto part : split(s, ':')) {
    try {
      size_t pos = 0;
      std::string p(trim(part));
      long v = std::stol(p, &pos);
      if (pos != p.size() || v < 0) throw std::invalid_argument(p);
      r.push_back(static_cast<size_t>(v));
    } catch (const std::logic_error&) {
      throw UsageError("bad split ratio '" + s + "'");
    }
  }
  if (r.empty()) throw UsageError("bad split ratio '" + s + "'");
  return r;
}

inline std::string gazetteer_text(const AffixGazetteer& g) {
  std::vector<std::string> lines;
  for (const auto& s : g.suffixes) lines.push_back("-" + to_utf8(s));
  for (const auto& p : g.prefixes) lines.push_back(to_utf8(p) + "-");
  std::sort(lines.begin(), lines.end());
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  return out;
}

inline std::string dictionary_text(const SynthGrammar& g) {
  std::vector<std::string> lines;
  for (const auto& r : g.roots) lines.push_back(to_utf8(r.surface));
  std::sort(lines.begin(), lines.end());
  lines.erase(std::unique(lines.begin(), lines.end()), lines.end());
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  return out;
}

/// Writes <prefix>.<part>.tsv for each ratio part (train/tune/dev/test for
/// four parts) plus <prefix>.affixes.txt and <prefix>.roots.txt.
inline int cmd_synth(const SynthOptions& o, std::ostream& out) {
  if (!o.dump_grammar.empty()) {
    std::ostringstream s;
    agglutinative_grammar(o.seed < 0 ? 1 : static_cast<uint64_t>(o.seed)).write(s);
    write_text_file(o.dump_grammar, s.str());
    out << "wrote grammar to " << o.dump_grammar << '\n';
    if (o.grammar.empty()) return kOk;
  }
  if (o.grammar.empty()) throw UsageError("--grammar is required");
  if (o.out_prefix.empty()) throw UsageError("--out-prefix is required");
  std::ifstream gin(o.grammar);
  if (!gin) throw DataError("cannot open grammar '" + o.grammar + "'");
  SynthGrammar g = SynthGrammar::load(gin);
  if (o.seed >= 0) g.seed = static_cast<uint64_t>(o.seed);
  const auto ratio = parse_ratio(o.split);
  Dataset all = generate(g, o.n);
  auto parts = split_by_ratio(all, ratio);
  static const char* names[] = {"train", "tune", "dev", "test"};
  for (size_t i = 0; i < parts.size(); ++i) {
    std::string name = ratio.size() == 4 ? names[i] : "part" + std::to_string(i);
    std::ostringstream s;
    write_corpus(s, parts[i]);
    const std::string path = o.out_prefix + "." + name + ".tsv";
    write_text_file(path, s.str());
    out << path << '\t' << parts[i].size() << '\n';
  }
  write_text_file(o.out_prefix + ".affixes.txt", gazetteer_text(grammar_gazetteer(g)));
  write_text_file(o.out_prefix + ".roots.txt", dictionary_text(g));
  return kOk;
}

/// Runs `fn`, mapping library exceptions to exit codes with a message on
/// `err`.
template <typename Fn>
int guarded(Fn&& fn, std::ostream& err = std::cerr) {
  try {
    return fn();
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kNumeric;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const GranularityError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    err << "data error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kData;
  }
}

}  // namespace lmseg::cli
