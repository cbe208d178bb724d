#include <gtest/gtest.h>

#include "lmseg/corpus.hpp"
#include "lmseg/morphotags.hpp"

using namespace lmseg;

namespace {

LabeledSegmentation analysis(const std::string& word, const std::string& text) {
  return detail::parse_analysis(to_u32(word), text, {});
}

LabeledSegmentation genclesmelerin() {
  return analysis("gençleşmelerin",
                  "genç:ROOT:ADJ leş:SUFFIX:DERIV:VERB me:SUFFIX:DERIV:NOUN "
                  "ler:SUFFIX:INFL:NOUN:NUMBER:PLURAL "
                  "in:SUFFIX:INFL:NOUN:CASE:GENITIVE");
}

}  // namespace

TEST(MorphTag, ParsesFiveComponentPath) {
  MorphTag t = MorphTag::parse("SUFFIX:INFL:NOUN:NUMBER:PLURAL");
  EXPECT_EQ(t.depth(), 5u);
  EXPECT_TRUE(t.is_inflectional());
  EXPECT_EQ(t.to_string(), "SUFFIX:INFL:NOUN:NUMBER:PLURAL");
}

TEST(MorphTag, ParsesBareRoot) {
  MorphTag t = MorphTag::parse("ROOT");
  EXPECT_EQ(t.depth(), 1u);
  EXPECT_TRUE(t.is_root());
}

TEST(MorphTag, RejectsInflectionUnderRoot) {
  try {
    MorphTag::parse("ROOT:INFL");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("INFL"), std::string::npos);
  }
}

TEST(MorphTag, RejectsMalformedText) {
  EXPECT_THROW(MorphTag::parse(""), ParseError);
  EXPECT_THROW(MorphTag::parse("SUFFIX::NOUN"), ParseError);
  EXPECT_THROW(MorphTag::parse("SUFFIX:INFL:NOUN:NUMBER:PLURAL:X"), ParseError);
  EXPECT_THROW(MorphTag::parse("ROOT:DERIV"), ParseError);
  EXPECT_THROW(MorphTag::parse("STEM"), ParseError);
}

TEST(MorphTag, ErrorNamesOffendingComponent) {
  try {
    MorphTag::parse("SUFFIX:INFL:NOUN:NUMBER:PLURAL:EXTRA");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("EXTRA"), std::string::npos);
  }
}

TEST(Project, Examples) {
  auto p = [](const char* t, int level) {
    return project(MorphTag::parse(t), TagsetLevel(level)).to_string();
  };
  EXPECT_EQ(p("SUFFIX:INFL:NOUN:NUMBER:PLURAL", 2), "SUFFIX:INFL");
  EXPECT_EQ(p("PREFIX:DERIV:VERB", 1), "PREFIX");
  EXPECT_EQ(p("ROOT:NOUN", 0), "SEGMENT");
  EXPECT_EQ(p("ROOT:NOUN", 1), "ROOT");
  EXPECT_EQ(p("ROOT:NOUN", 2), "ROOT");
  EXPECT_EQ(p("ROOT:NOUN", 3), "ROOT:NOUN");
  EXPECT_EQ(p("ROOT:NOUN", 5), "ROOT:NOUN");
  EXPECT_EQ(p("SUFFIX:INFL:NOUN:NUMBER:PLURAL", 4), "SUFFIX:INFL:NOUN:NUMBER");
  EXPECT_EQ(p("SUFFIX:INFL", 5), "SUFFIX:INFL");
}

TEST(Project, IdempotentAndMonotone) {
  const char* tags[] = {"SUFFIX:INFL:NOUN:NUMBER:PLURAL", "PREFIX:DERIV:VERB",
                        "ROOT:ADJ", "ROOT", "SEGMENT", "UNKNOWN",
                        "SUFFIX:DERIV:NOUN", "PREFIX:INFL:VERB:ASPECT:PERF"};
  for (const char* s : tags) {
    MorphTag t = MorphTag::parse(s);
    for (int j = 0; j <= kMaxLevel; ++j) {
      MorphTag pj = project(t, TagsetLevel(j));
      EXPECT_EQ(project(pj, TagsetLevel(j)), pj) << s << " level " << j;
      for (int i = 0; i <= j; ++i) {
        EXPECT_EQ(project(pj, TagsetLevel(i)), project(t, TagsetLevel(i)))
            << s << " " << i << "<=" << j;
      }
    }
  }
}

TEST(TagsetLevel, RejectsOutOfRange) {
  EXPECT_THROW(TagsetLevel(7), ParseError);
  EXPECT_THROW(TagsetLevel(-1), ParseError);
  EXPECT_NO_THROW(TagsetLevel(5));
}

TEST(Tagset, LevelZeroIsSingleSegmentLabel) {
  std::vector<LabeledSegmentation> data{genclesmelerin()};
  Tagset t = build_tagset(data, TagsetLevel(0));
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t.name(0), "SEGMENT");
}

TEST(Tagset, LevelTwoCollapsesToPositionAndKind) {
  std::vector<LabeledSegmentation> data{
      analysis("takler", "tak:ROOT:NOUN ler:SUFFIX:INFL:NOUN")};
  Tagset t = build_tagset(data, TagsetLevel(2));
  ASSERT_EQ(t.size(), 2u);
  EXPECT_TRUE(t.index_of(MorphTag::parse("ROOT")).has_value());
  EXPECT_TRUE(t.index_of(MorphTag::parse("SUFFIX:INFL")).has_value());
}

TEST(Tagset, SizesGrowWithLevel) {
  std::vector<LabeledSegmentation> data{genclesmelerin()};
  size_t last = 0;
  for (int level = 0; level <= kMaxLevel; ++level) {
    size_t s = build_tagset(data, TagsetLevel(level)).size();
    EXPECT_GE(s, last);
    last = s;
  }
  EXPECT_EQ(build_tagset(data, TagsetLevel(1)).size(), 2u);
  EXPECT_EQ(build_tagset(data, TagsetLevel(2)).size(), 3u);
  EXPECT_EQ(build_tagset(data, TagsetLevel(5)).size(), 5u);
}

TEST(Tagset, IndicesFollowSortedOrder) {
  std::vector<LabeledSegmentation> data{genclesmelerin()};
  Tagset t = build_tagset(data, TagsetLevel(2));
  for (size_t i = 1; i < t.size(); ++i) EXPECT_LT(t.at(i - 1), t.at(i));
}

TEST(Views, TurkishFigureExample) {
  Views v = derive_views(genclesmelerin());
  ASSERT_EQ(v.roots.size(), 1u);
  EXPECT_EQ(to_utf8(v.roots[0]), "genç");
  EXPECT_EQ(to_utf8(v.stem), "gençleşme");
  EXPECT_EQ(v.morph_tag, (std::vector<std::string>{"PLURAL", "GENITIVE"}));
  EXPECT_EQ(v.ums.size(), 5u);
}

TEST(Views, GermanLevelThreeStem) {
  auto ls = analysis("Enteisungen",
                     "Ent:PREFIX:DERIV:VERB eis:ROOT:NOUN ung:SUFFIX:DERIV:NOUN "
                     "en:SUFFIX:INFL:NOUN");
  EXPECT_EQ(to_utf8(stem_of(ls)), "Enteisung");
  EXPECT_TRUE(inflection_bundle(ls).empty());
}

TEST(Views, ParticipleRootAndStem) {
  auto ls = analysis("aufgeschrieben",
                     "auf:PREFIX:DERIV:VERB ge:PREFIX:INFL:VERB:ASPECT:PERFECTIVE "
                     "schrieb:ROOT:VERB en:SUFFIX:INFL:VERB:FORM:PARTICIPLE");
  auto roots = root_segments(ls);
  ASSERT_EQ(roots.size(), 1u);
  EXPECT_EQ(to_utf8(roots[0]), "schrieb");
  EXPECT_EQ(to_utf8(stem_of(ls)), "aufschrieb");
}

TEST(Views, SingleRoot) {
  Views v = derive_views(analysis("a", "a:ROOT"));
  EXPECT_EQ(v.ums, std::vector<std::u32string>{U"a"});
  EXPECT_EQ(v.roots, std::vector<std::u32string>{U"a"});
  EXPECT_EQ(v.stem, U"a");
  EXPECT_TRUE(v.morph_tag.empty());
}

TEST(Views, CoarseLabelsRaiseGranularityError) {
  auto l1 = genclesmelerin().projected(TagsetLevel(1));
  EXPECT_THROW(stem_of(l1), GranularityError);
  EXPECT_NO_THROW(root_segments(l1));
  auto l0 = genclesmelerin().projected(TagsetLevel(0));
  EXPECT_THROW(root_segments(l0), GranularityError);
}

TEST(Views, BundleFollowsLevel) {
  auto l4 = genclesmelerin().projected(TagsetLevel(4));
  EXPECT_EQ(inflection_bundle(l4), (std::vector<std::string>{"NUMBER", "CASE"}));
  auto l2 = genclesmelerin().projected(TagsetLevel(2));
  EXPECT_TRUE(inflection_bundle(l2).empty());
}

TEST(LabeledSegmentation, BoundariesAndInvariants) {
  auto ls = genclesmelerin();
  EXPECT_EQ(ls.boundaries(), (std::vector<size_t>{4, 7, 9, 12}));
  EXPECT_THROW(LabeledSegmentation(U"ab", {{U"a", MorphTag::root()}}), DataError);
  EXPECT_THROW(LabeledSegmentation(U"a", {{U"", MorphTag::root()}, {U"a", MorphTag::root()}}),
               DataError);
}
