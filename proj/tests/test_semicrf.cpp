#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"

using namespace lmseg;

namespace {

Model zero_model(const std::u32string& word, size_t L, size_t m = 12) {
  std::mt19937_64 rng(0);
  Model model = oracle::random_model(word, L, m, rng);
  std::fill(model.weights.begin(), model.weights.end(), 0.0);
  return model;
}

Model level_zero_model(const std::string& corpus_text) {
  std::istringstream in(corpus_text);
  Dataset d = load_corpus(in);
  TrainConfig cfg;
  cfg.level = 0;
  return build_model(d, cfg, {});
}

}  // namespace

TEST(Score, ZeroWeightsScoreZero) {
  Model m = zero_model(U"abc", 2);
  auto ls = LabeledSegmentation::from_lengths(
      U"abc", {1, 2}, {m.tagset.at(0), m.tagset.at(1)});
  EXPECT_EQ(score(m, ls), 0.0);
}

TEST(Score, LabelOutsideTagset) {
  Model m = zero_model(U"ab", 1);
  auto ls = LabeledSegmentation(U"ab", {{U"ab", MorphTag::parse("SUFFIX:INFL")}});
  EXPECT_THROW(score(m, ls), DataError);
}

TEST(Forward, CountsSegmentations) {
  EXPECT_NEAR(forward(zero_model(U"a", 1), U"a").log_z, 0.0, 1e-15);
  EXPECT_NEAR(forward(zero_model(U"abc", 1), U"abc").log_z, std::log(4.0), 1e-12);
  EXPECT_NEAR(forward(zero_model(U"ab", 2), U"ab").log_z, std::log(6.0), 1e-12);
}

TEST(Forward, MaxLengthRestrictsLattice) {
  // Compositions of 4 into parts of size <= 2: 5.
  EXPECT_NEAR(forward(zero_model(U"abcd", 1, 2), U"abcd").log_z, std::log(5.0), 1e-12);
}

TEST(ForwardBackward, AgreeOnRandomInstances) {
  std::mt19937_64 rng(42);
  for (int i = 0; i < 50; ++i) {
    const size_t n = 1 + rng() % 7, L = 1 + rng() % 4, m = 1 + rng() % n;
    auto w = oracle::random_word(n, rng);
    Model model = oracle::random_model(w, L, m, rng);
    Chart c = forward_backward(potentials(model, w));
    EXPECT_NEAR(c.log_z, c.log_z_backward, 1e-10);
  }
}

TEST(ForwardBackward, MatchesEnumeration) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 40; ++i) {
    const size_t n = 1 + rng() % 6, L = 1 + rng() % 3;
    auto w = oracle::random_word(n, rng);
    Model model = oracle::random_model(w, L, n, rng);
    auto e = oracle::enumerate(model, w);
    Chart c = forward_backward(potentials(model, w));
    EXPECT_NEAR(c.log_z, e.log_z, 1e-8);
    EXPECT_NEAR(c.log_z_backward, e.log_z, 1e-8);
  }
}

TEST(Forward, ShiftingBeginTransitionsShiftsLogZ) {
  std::mt19937_64 rng(9);
  auto w = oracle::random_word(5, rng);
  Model model = oracle::random_model(w, 3, 5, rng);
  Potentials pot = potentials(model, w);
  const double before = forward(pot).log_z;
  Marginals m0 = marginals(pot, forward_backward(pot));
  for (size_t y = 0; y < pot.L; ++y) pot.trans[y] += 1.75;
  Chart c = forward_backward(pot);
  EXPECT_NEAR(c.log_z - before, 1.75, 1e-12);
  Marginals m1 = marginals(pot, c);
  for (size_t i = 0; i < m0.p.size(); ++i) EXPECT_NEAR(m0.p[i], m1.p[i], 1e-12);
}

TEST(Marginals, ZeroWeightsTwoLetters) {
  Model model = zero_model(U"ab", 1);
  Marginals mg = marginals(model, U"ab");
  EXPECT_NEAR(mg.segment(0, 2, 0), 0.5, 1e-12);
  EXPECT_NEAR(mg.segment(0, 1, 0), 0.5, 1e-12);
  EXPECT_NEAR(mg.segment(1, 1, 0), 0.5, 1e-12);
}

TEST(Marginals, MatchEnumerationAndCoverEachPosition) {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 30; ++i) {
    const size_t n = 1 + rng() % 6, L = 1 + rng() % 3;
    auto w = oracle::random_word(n, rng);
    Model model = oracle::random_model(w, L, n, rng);
    auto e = oracle::enumerate(model, w);
    Marginals mg = marginals(model, w);
    for (size_t s = 0; s < n; ++s) {
      for (size_t len = 1; s + len <= n; ++len) {
        for (size_t y = 0; y < L; ++y) {
          auto it = e.segment_marginal.find({s, len, y});
          const double want = it == e.segment_marginal.end() ? 0.0 : it->second;
          EXPECT_NEAR(mg.segment(s, len, y), want, 1e-8);
        }
      }
    }
    for (size_t pos = 0; pos < n; ++pos) {
      double cover = 0.0;
      for (size_t s = 0; s <= pos; ++s) {
        for (size_t len = pos - s + 1; s + len <= n; ++len) {
          for (size_t y = 0; y < L; ++y) cover += mg.segment(s, len, y);
        }
      }
      EXPECT_NEAR(cover, 1.0, 1e-9);
    }
  }
}

TEST(Viterbi, ZeroWeightsPicksWholeWordFirstLabel) {
  Model model = zero_model(U"abcd", 3);
  Decoded d = viterbi(potentials(model, U"abcd"));
  ASSERT_EQ(d.path.size(), 1u);
  EXPECT_EQ(d.path[0], (PathStep{0, 4, 0}));
}

TEST(Viterbi, MatchesEnumeratedArgmax) {
  std::mt19937_64 rng(23);
  for (int i = 0; i < 60; ++i) {
    const size_t n = 1 + rng() % 6, L = 1 + rng() % 3;
    auto w = oracle::random_word(n, rng);
    Model model = oracle::random_model(w, L, n, rng);
    auto e = oracle::enumerate(model, w);
    Decoded d = viterbi(potentials(model, w));
    EXPECT_EQ(d.score, e.best_score);
    std::vector<size_t> lens, labs;
    for (const auto& st : d.path) {
      lens.push_back(st.len);
      labs.push_back(st.label);
    }
    EXPECT_EQ(lens, e.best.lengths);
    EXPECT_EQ(labs, e.best.labels);
  }
}

TEST(Viterbi, DictionaryFeatureSplitsCompound) {
  FeatureConfig f;
  f.use_dict = true;
  std::mt19937_64 rng(1);
  const std::u32string w = U"homework";
  Model model;
  {
    auto dict = std::make_shared<DictionarySet>();
    dict->insert(U"home");
    dict->insert(U"work");
    f.max_segment_length = 8;
    model.features = f;
    model.resources.dictionary = dict;
    model.tagset = Tagset(TagsetLevel(2), {MorphTag::root(), MorphTag::parse("SUFFIX:INFL")});
    for (size_t s = 0; s < w.size(); ++s) {
      for (size_t len = 1; s + len <= w.size(); ++len) {
        for (size_t y = 0; y < 2; ++y) {
          for (std::string prev : {"BEGIN", "ROOT", "SUFFIX:INFL"}) {
            featurize(w, s, s + len, model.tagset.name(y), prev, model.features,
                      model.resources, model.vocab);
          }
        }
      }
    }
    model.vocab.freeze();
    model.weights.assign(model.vocab.size(), 0.0);
    model.weights[*model.vocab.find("DICT:HIT@ROOT")] = 5.0;
  }
  auto pred = viterbi(model, w).analysis;
  EXPECT_EQ(pred.to_string(), "home:ROOT work:ROOT");
  auto e = oracle::enumerate(model, w);
  EXPECT_EQ(e.best.lengths, (std::vector<size_t>{4, 4}));
}

TEST(Gradient, SingleLetterIsZero) {
  Model model = level_zero_model("a\ta:SEGMENT\n");
  auto g = gradient(model, LabeledSegmentation(U"a", {{U"a", MorphTag::segment()}}));
  EXPECT_NEAR(g.nll, 0.0, 1e-15);
  for (double v : g.grad) EXPECT_NEAR(v, 0.0, 1e-15);
}

TEST(Gradient, HandEnumeratedTransition) {
  Model model = level_zero_model("ab\ta:SEGMENT b:SEGMENT\n");
  auto gold = LabeledSegmentation::from_lengths(
      U"ab", {1, 1}, {MorphTag::segment(), MorphTag::segment()});
  auto g = gradient(model, gold);
  auto t = model.vocab.find("TRANS:SEGMENT:SEGMENT");
  ASSERT_TRUE(t.has_value());
  EXPECT_NEAR(g.grad[*t], -0.5, 1e-12);
  EXPECT_NEAR(g.nll, std::log(2.0), 1e-12);
}

TEST(Gradient, FiniteDifferences) {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 8; ++i) {
    const size_t n = 2 + rng() % 4, L = 1 + rng() % 3;
    auto w = oracle::random_word(n, rng);
    Model model = oracle::random_model(w, L, n, rng);
    auto gold = oracle::random_analysis(model, w, rng);
    auto g = gradient(model, gold);
    EXPECT_NEAR(g.nll, oracle::nll(model, gold), 1e-9);
    for (size_t k = 0; k < std::min<size_t>(20, model.weights.size()); ++k) {
      const size_t j = rng() % model.weights.size();
      const double h = 1e-5, w0 = model.weights[j];
      model.weights[j] = w0 + h;
      const double up = gradient(model, gold).nll;
      model.weights[j] = w0 - h;
      const double down = gradient(model, gold).nll;
      model.weights[j] = w0;
      const double fd = (up - down) / (2 * h);
      EXPECT_LE(std::abs(fd - g.grad[j]), 1e-4 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST(GoldPath, SegmentLongerThanMaximum) {
  Model model = zero_model(U"abcd", 1, 2);
  auto gold = LabeledSegmentation(U"abcd", {{U"abcd", model.tagset.at(0)}});
  try {
    gold_path(model, gold);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("max-seg"), std::string::npos);
  }
}

TEST(LinearChain, MaxLengthOneMatchesIndependentCrf) {
  std::mt19937_64 rng(77);
  for (int i = 0; i < 20; ++i) {
    const size_t n = 1 + rng() % 8, L = 1 + rng() % 4;
    auto w = oracle::random_word(n, rng);
    Model model = oracle::random_model(w, L, 1, rng);
    EXPECT_NEAR(forward(model, w).log_z, oracle::linear_chain_log_z(model, w), 1e-8);
  }
}
