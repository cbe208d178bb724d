#include <iostream>

#include <CLI11.hpp>

#include "lmseg/cli.hpp"

using namespace lmseg::cli;

namespace {

void add_train_flags(CLI::App* cmd, TrainOptions& o) {
  cmd->add_option("--train", o.train, "labeled corpus (word TAB analyses)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--level", o.level, "tagset level 0-5")->check(CLI::Range(0, 5));
  cmd->add_option("--l2", o.l2, "L2 coefficient")->check(CLI::NonNegativeNumber);
  cmd->add_option("--ngram", o.ngram, "max context n-gram length")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--max-seg", o.max_seg, "max segment length (0 = unbounded)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--affix", o.affix, "affix gazetteer (-suffix / prefix- lines)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--dict", o.dict, "word list for dictionary features")
      ->check(CLI::ExistingFile);
  cmd->add_option("--lsv", o.lsv, "word list for letter successor variety")
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "random seed");
  cmd->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--max-iter", o.max_iterations, "optimizer iteration cap");
  cmd->add_option("--tol", o.tolerance, "relative objective tolerance")
      ->check(CLI::PositiveNumber);
  cmd->add_flag("--casefold", o.casefold, "case-fold words after NFC");
  cmd->add_flag("--all-golds", o.marginalize_golds,
                "supervise with every gold analysis instead of the first");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Labeled morphological segmentation with a semi-Markov CRF"};
  app.require_subcommand(1);

  TrainOptions train;
  train.threads = default_threads();
  auto* c_train = app.add_subcommand("train", "train a segmentation model");
  add_train_flags(c_train, train);
  c_train->add_option("--out", train.out, "model file")->required();
  c_train->add_option("--log", train.log, "write per-iteration objective log");

  MaxEntOptions maxent;
  auto* c_maxent = app.add_subcommand("train-maxent", "train a whole-word tag classifier");
  c_maxent->add_option("--train", maxent.train, "labeled corpus")
      ->required()
      ->check(CLI::ExistingFile);
  c_maxent->add_option("--out", maxent.out, "model file")->required();
  c_maxent->add_option("--level", maxent.level, "tag level (4 or 5)")->check(CLI::Range(4, 5));
  c_maxent->add_option("--ngram", maxent.ngram, "max character n-gram length")
      ->check(CLI::PositiveNumber);
  c_maxent->add_option("--reg", maxent.regularizer, "L1 or L2")
      ->check(CLI::IsMember({"L1", "L2"}));
  c_maxent->add_option("--coef", maxent.coefficient, "regularization coefficient")
      ->check(CLI::NonNegativeNumber);
  c_maxent->add_flag("--split", maxent.split, "also score each tag constituent");
  c_maxent->add_flag("--casefold", maxent.casefold, "case-fold words after NFC");

  PredictOptions predict;
  auto* c_predict = app.add_subcommand("predict", "analyze words, one per line");
  c_predict->add_option("--model", predict.model, "model file")
      ->required()
      ->check(CLI::ExistingFile);
  c_predict->add_option("--input", predict.input, "word list")
      ->required()
      ->check(CLI::ExistingFile);
  c_predict->add_option("--view", predict.view, "lms | ums | stem | root | tag")
      ->check(CLI::IsMember({"lms", "ums", "stem", "root", "tag"}));

  EvaluateOptions evaluate;
  auto* c_eval = app.add_subcommand("evaluate", "score a model against a gold corpus");
  c_eval->add_option("--model", evaluate.model, "model file")
      ->required()
      ->check(CLI::ExistingFile);
  c_eval->add_option("--gold", evaluate.gold, "gold corpus")
      ->required()
      ->check(CLI::ExistingFile);
  c_eval->add_option("--task", evaluate.task, "seg | stem | root | tag")
      ->check(CLI::IsMember({"seg", "stem", "root", "tag"}));
  c_eval->add_option("--underseg-level", evaluate.underseg_level,
                     "label level of the undersegmentation matrix")
      ->check(CLI::Range(0, 5));
  c_eval->add_option("--report", evaluate.report, "write metrics as TSV");
  c_eval->add_option("--report-json", evaluate.report_json, "write metrics as JSON");
  c_eval->add_option("--matrix", evaluate.matrix, "write undersegmentation matrix TSV");

  TuneOptions tune;
  tune.base.threads = default_threads();
  auto* c_tune = app.add_subcommand("tune", "cross-validated grid search");
  add_train_flags(c_tune, tune.base);
  c_tune->add_option("--folds", tune.folds, "number of folds")->check(CLI::Range(3, 1000));
  c_tune->add_option("--grid", tune.grid, "grid TSV (axis TAB values...)")
      ->required()
      ->check(CLI::ExistingFile);
  c_tune->add_option("--metric", tune.metric, "seg_f1 | stem_acc | tag_acc")
      ->check(CLI::IsMember({"seg_f1", "stem_acc", "tag_acc"}));
  c_tune->add_option("--grid-out", tune.grid_out, "write per-cell scores TSV");
  c_tune->add_option("--best-out", tune.best_out, "write the winning config as JSON");

  SynthOptions synth;
  auto* c_synth = app.add_subcommand("synth", "generate a synthetic corpus");
  c_synth->add_option("--grammar", synth.grammar, "grammar TSV")->check(CLI::ExistingFile);
  c_synth->add_option("--dump-grammar", synth.dump_grammar,
                      "write the built-in agglutinative grammar");
  c_synth->add_option("--n", synth.n, "number of word types")->check(CLI::PositiveNumber);
  c_synth->add_option("--seed", synth.seed, "override the grammar seed");
  c_synth->add_option("--split", synth.split, "ratio, e.g. 8:1:1:2");
  c_synth->add_option("--out-prefix", synth.out_prefix, "output path prefix");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  return guarded([&] {
    if (*c_train) return cmd_train(train, std::cout);
    if (*c_maxent) return cmd_maxent_train(maxent, std::cout);
    if (*c_predict) return cmd_predict(predict, std::cout);
    if (*c_eval) return cmd_evaluate(evaluate, std::cout);
    if (*c_tune) return cmd_tune(tune, std::cout);
    return cmd_synth(synth, std::cout);
  });
}
