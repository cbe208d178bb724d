#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "lmseg/corpus.hpp"

using namespace lmseg;

namespace {

Dataset corpus(const std::string& text) {
  std::istringstream in(text);
  return load_corpus(in);
}

Dataset numbered_words(size_t n) {
  Dataset d;
  for (size_t i = 0; i < n; ++i) {
    std::u32string w = to_u32("w" + std::to_string(i));
    d.add({w, {LabeledSegmentation(w, {{w, MorphTag::root()}})}});
  }
  return d;
}

}  // namespace

TEST(LoadCorpus, TurkishFigureLine) {
  Dataset d = corpus(
      "gençleşmelerin\tgenç:ROOT:ADJ leş:SUFFIX:DERIV:VERB me:SUFFIX:DERIV:NOUN "
      "ler:SUFFIX:INFL:NOUN:NUMBER:PLURAL in:SUFFIX:INFL:NOUN:CASE:GENITIVE\n");
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].golds.size(), 1u);
  EXPECT_EQ(d[0].golds[0].size(), 5u);
}

TEST(LoadCorpus, SingleSegment) {
  Dataset d = corpus("a\ta:ROOT\n");
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].golds[0].size(), 1u);
}

TEST(LoadCorpus, ConcatenationMismatchCitesLine) {
  EXPECT_NO_THROW(corpus("reed\tre:PREFIX ed:SUFFIX\n"));
  try {
    corpus("a\ta:ROOT\nreed\tre:PREFIX e:ROOT\n");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(LoadCorpus, BadTagAndDuplicates) {
  EXPECT_THROW(corpus("ab\ta:ROOT b:ROOT:INFL\n"), ParseError);
  EXPECT_THROW(corpus("a\ta:ROOT\na\ta:ROOT\n"), DataError);
  EXPECT_THROW(corpus("ab a:ROOT b:SUFFIX\n"), ParseError);
}

TEST(LoadCorpus, MultipleGoldsAndRoundTrip) {
  const std::string text =
      "homework\thome:ROOT work:ROOT, homework:ROOT\nab\ta:ROOT b:SUFFIX:INFL\n";
  Dataset d = corpus(text);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d[0].golds.size(), 2u);
  std::ostringstream out;
  write_corpus(out, d);
  EXPECT_EQ(corpus(out.str()), d);
}

TEST(LoadCorpus, CasefoldNormalizes) {
  std::istringstream in("Home\tHome:ROOT\n");
  Dataset d = load_corpus(in, Role::Train, Normalization{true});
  EXPECT_EQ(d[0].word, U"home");
}

TEST(LoadCorpus, NfcNormalizes) {
  // "ç" written as c + combining cedilla.
  std::istringstream in("gen\x63\xcc\xa7\tgen\x63\xcc\xa7:ROOT\n");
  Dataset d = load_corpus(in);
  EXPECT_EQ(d[0].word, U"genç");
}

TEST(Gazetteer, IndonesianSuffixes) {
  std::istringstream in("-kau\n-an\n-nya\n-ku\n-mu\n");
  AffixGazetteer g = load_gazetteer(in);
  EXPECT_EQ(g.suffixes.size(), 5u);
  EXPECT_EQ(g.prefixes.size(), 0u);
}

TEST(Gazetteer, ZuluPrefixes) {
  std::istringstream in("i-\nu-\nza-\ntsh-\nmi-\nobu-\nolu-\n");
  AffixGazetteer g = load_gazetteer(in);
  for (auto p : {U"i", U"u", U"za"}) EXPECT_TRUE(g.prefixes.count(p));
  EXPECT_TRUE(g.suffixes.empty());
}

TEST(Gazetteer, EmptyAndMalformed) {
  std::istringstream empty("");
  EXPECT_TRUE(load_gazetteer(empty).empty());
  std::istringstream none("an\n");
  EXPECT_THROW(load_gazetteer(none), ParseError);
  std::istringstream both("-an-\n");
  EXPECT_THROW(load_gazetteer(both), ParseError);
}

TEST(Dictionary, MembershipIsExact) {
  std::istringstream in("home\nwork\nhome\n");
  DictionarySet d = load_dictionary(in);
  EXPECT_TRUE(d.contains(U"home"));
  EXPECT_FALSE(d.contains(U"homework"));
  EXPECT_EQ(d.size(), 2u);
}

TEST(WordList, SkipsBlanksAndDeduplicates) {
  std::istringstream in("a\n\nb\na\n");
  Dataset d = load_word_list(in);
  EXPECT_EQ(d.size(), 2u);
  EXPECT_EQ(d.role(), Role::Unlabeled);
}

TEST(Folds, ThousandWordsTenFolds) {
  auto folds = split_folds(numbered_words(1000), 10, 7);
  ASSERT_EQ(folds.size(), 10u);
  for (const auto& f : folds) {
    EXPECT_EQ(f.train.size(), 800u);
    EXPECT_EQ(f.tune.size(), 100u);
    EXPECT_EQ(f.dev.size(), 100u);
  }
}

TEST(Folds, DeterministicForSeed) {
  Dataset d = numbered_words(10);
  auto a = split_folds(d, 2, 3), b = split_folds(d, 2, 3);
  for (size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].train, b[i].train);
    EXPECT_EQ(a[i].tune, b[i].tune);
    EXPECT_EQ(a[i].dev, b[i].dev);
  }
}

TEST(Folds, EachWordTunedExactlyOnce) {
  Dataset d = numbered_words(10);
  for (size_t k : {2u, 3u, 5u}) {
    auto folds = split_folds(d, k, 11);
    std::multiset<std::u32string> seen;
    for (const auto& f : folds) {
      for (const auto& e : f.tune.entries()) seen.insert(e.word);
      EXPECT_EQ(f.train.size() + f.tune.size() + f.dev.size(), d.size());
    }
    EXPECT_EQ(seen.size(), d.size());
    for (const auto& e : d.entries()) EXPECT_EQ(seen.count(e.word), 1u);
  }
}

TEST(Folds, TooManyFolds) {
  EXPECT_THROW(split_folds(numbered_words(3), 4, 0), DataError);
}

TEST(Concat, RejectsOverlap) {
  Dataset a = numbered_words(3);
  EXPECT_THROW(concat({&a, &a}), DataError);
}
