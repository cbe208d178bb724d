#pragma once

// Synthetic agglutinative corpora from a declared morphotactic grammar.
//
// Grammar TSV rows (tab-separated, '#' comments):
//   root    ROOT:NOUN                      tak   1.0
//   prefix  PREFIX:DERIV:VERB              ent   1.0
//   suffix  SUFFIX:INFL:NOUN:NUMBER:PLURAL ler   1.0
//   slot    SUFFIX:INFL:NOUN:NUMBER        -     0.5   (fill probability)
//   order   NUMBER                         CASE        (NUMBER precedes CASE)
//   seed    -                              -     7
//
// A word is a weighted root, optional derivational prefixes, at most
// `max_derivations` derivational suffixes (each changing the current POS
// to the one it derives, never to the POS it already has), then one value
// per inflectional slot of the current POS in constraint order.

#include <algorithm>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lmseg/corpus.hpp"
#include "lmseg/error.hpp"
#include "lmseg/morphotags.hpp"

namespace lmseg {

struct SynthMorph {
  MorphTag tag;
  std::u32string surface;
  double weight = 1.0;
};

struct SynthGrammar {
  std::vector<SynthMorph> roots;
  std::vector<SynthMorph> prefixes;
  std::vector<SynthMorph> suffixes;
  std::map<std::string, double> slot_probability;
  /// (A, B): inflectional feature A must precede feature B.
  std::vector<std::pair<std::string, std::string>> order;
  uint64_t seed = 0;
  size_t max_derivations = 1;

  static constexpr double kDefaultSlotProbability = 0.5;

  /// Slot key of an affix: level 4 for inflection, level 3 otherwise.
  static std::string slot_of(const MorphTag& tag) {
    return project(tag, TagsetLevel(tag.is_inflectional() ? 4 : 3)).to_string();
  }

  double probability(const std::string& slot) const {
    auto it = slot_probability.find(slot);
    return it == slot_probability.end() ? kDefaultSlotProbability : it->second;
  }

  static SynthGrammar load(std::istream& in) {
    SynthGrammar g;
    std::string raw;
    size_t line_no = 0;
    while (std::getline(in, raw)) {
      ++line_no;
      std::string_view line = trim(raw);
      if (line.empty() || line.front() == '#') continue;
      auto f = split(line, '\t');
      auto where = [&] { return "grammar line " + std::to_string(line_no) + ": "; };
      try {
        const std::string kind(trim(f[0]));
        if (kind == "order") {
          if (f.size() < 3) throw ParseError("order needs two features");
          g.order.emplace_back(trim(f[1]), trim(f[2]));
          continue;
        }
        if (f.size() < 4) throw ParseError("expected kind, tag, surface, weight");
        const double w = std::stod(std::string(trim(f[3])));
        if (kind == "seed") {
          g.seed = static_cast<uint64_t>(w);
        } else if (kind == "max_derivations") {
          g.max_derivations = static_cast<size_t>(w);
        } else if (kind == "slot") {
          g.slot_probability[MorphTag::parse(trim(f[1])).to_string()] = w;
        } else {
          SynthMorph m{MorphTag::parse(trim(f[1])), to_u32(trim(f[2])), w};
          if (m.surface.empty()) throw ParseError("empty surface");
          if (kind == "root") {
            if (!m.tag.is_root()) throw ParseError("root row needs a ROOT tag");
            g.roots.push_back(std::move(m));
          } else if (kind == "prefix") {
            if (m.tag.position() != Position::Prefix || m.tag.depth() < 2) {
              throw ParseError("prefix row needs a PREFIX:DERIV/INFL tag");
            }
            g.prefixes.push_back(std::move(m));
          } else if (kind == "suffix") {
            if (m.tag.position() != Position::Suffix || m.tag.depth() < 2) {
              throw ParseError("suffix row needs a SUFFIX:DERIV/INFL tag");
            }
            g.suffixes.push_back(std::move(m));
          } else {
            throw ParseError("unknown row kind '" + kind + "'");
          }
        }
      } catch (const ParseError& e) {
        throw ParseError(where() + e.what());
      } catch (const std::logic_error&) {
        throw ParseError(where() + "bad numeric field");
      }
    }
    return g;
  }

  void write(std::ostream& out) const {
    out << "seed\t-\t-\t" << seed << '\n';
    out << "max_derivations\t-\t-\t" << max_derivations << '\n';
    auto rows = [&](const char* kind, const std::vector<SynthMorph>& v) {
      for (const auto& m : v) {
        out << kind << '\t' << m.tag.to_string() << '\t' << to_utf8(m.surface)
            << '\t' << m.weight << '\n';
      }
    };
    rows("root", roots);
    rows("prefix", prefixes);
    rows("suffix", suffixes);
    for (const auto& [slot, p] : slot_probability) {
      out << "slot\t" << slot << "\t-\t" << p << '\n';
    }
    for (const auto& [a, b] : order) out << "order\t" << a << '\t' << b << '\n';
  }
};

namespace detail {

inline std::string pos_of(const MorphTag& tag) {
  const auto& c = tag.components();
  if (tag.is_root()) return c.size() > 1 ? c[1] : "NONE";
  return c.size() > 2 ? c[2] : "NONE";
}

inline std::string feature_of(const MorphTag& tag) {
  const auto& c = tag.components();
  return c.size() > 3 ? c[3] : "NONE";
}

/// Feature names ordered by the precedence constraints (Kahn's algorithm,
/// alphabetical among unconstrained ones).
inline std::vector<std::string> order_features(
    std::set<std::string> feats,
    const std::vector<std::pair<std::string, std::string>>& order) {
  std::map<std::string, std::set<std::string>> after;
  std::map<std::string, int> indeg;
  for (const auto& f : feats) indeg[f] = 0;
  for (const auto& [a, b] : order) {
    if (!feats.count(a) || !feats.count(b)) continue;
    if (after[a].insert(b).second) ++indeg[b];
  }
  std::vector<std::string> out;
  std::set<std::string> ready;
  for (const auto& [f, d] : indeg) {
    if (d == 0) ready.insert(f);
  }
  while (!ready.empty()) {
    std::string f = *ready.begin();
    ready.erase(ready.begin());
    out.push_back(f);
    for (const auto& b : after[f]) {
      if (--indeg[b] == 0) ready.insert(b);
    }
  }
  if (out.size() != feats.size()) {
    throw DataError("cyclic order constraints in grammar");
  }
  return out;
}

}  // namespace detail

/// True when no inflectional feature appears after one it must precede.
inline bool respects_order(const SynthGrammar& g, const LabeledSegmentation& ls) {
  std::vector<std::string> feats;
  for (const auto& s : ls.segments()) {
    if (s.tag.is_inflectional()) feats.push_back(detail::feature_of(s.tag));
  }
  for (size_t i = 0; i < feats.size(); ++i) {
    for (size_t j = i + 1; j < feats.size(); ++j) {
      for (const auto& [a, b] : g.order) {
        if (feats[i] == b && feats[j] == a) return false;
      }
    }
  }
  return true;
}

/// Generates distinct word types and remembers their generation-time
/// analyses.
class SynthGenerator {
 public:
  explicit SynthGenerator(SynthGrammar grammar) : g_(std::move(grammar)) {
    if (g_.roots.empty()) throw DataError("grammar has no roots");
  }

  const SynthGrammar& grammar() const { return g_; }

  /// n distinct types with one level-5 gold analysis each.
  Dataset generate(size_t n) {
    if (n == 0) throw DataError("requested zero word types");
    std::mt19937_64 rng(g_.seed);
    Dataset data(Role::Train);
    const size_t max_attempts = 1000 * n + 10000;
    size_t attempts = 0;
    while (data.size() < n) {
      if (++attempts > max_attempts) {
        throw DataError("grammar inventory too small to produce " +
                        std::to_string(n) + " distinct types (got " +
                        std::to_string(data.size()) + ")");
      }
      LabeledSegmentation ls = sample(rng);
      if (data.contains(ls.word())) continue;
      data.add({ls.word(), {ls}});
    }
    generated_ = data;
    return data;
  }

  /// Views of a generated word's generation-time analysis.
  Views oracle_views(const std::u32string& word) const {
    return derive_views(oracle(word));
  }

  const LabeledSegmentation& oracle(const std::u32string& word) const {
    const Entry* e = generated_.find(word);
    if (!e) throw DataError("word '" + to_utf8(word) + "' was not generated");
    return e->golds.front();
  }

 private:
  template <typename Rng>
  const SynthMorph& pick(const std::vector<const SynthMorph*>& options, Rng& rng) {
    std::vector<double> w;
    for (const auto* m : options) w.push_back(m->weight);
    std::discrete_distribution<size_t> d(w.begin(), w.end());
    return *options[d(rng)];
  }

  template <typename Rng>
  bool coin(double p, Rng& rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
  }

  template <typename Rng>
  LabeledSegmentation sample(Rng& rng) {
    std::vector<const SynthMorph*> all_roots;
    for (const auto& r : g_.roots) all_roots.push_back(&r);
    const SynthMorph& root = pick(all_roots, rng);
    std::string pos = detail::pos_of(root.tag);

    std::vector<Segment> segs;
    // Prefix slots, outermost first in sorted slot order.
    std::map<std::string, std::vector<const SynthMorph*>> pre_slots;
    for (const auto& p : g_.prefixes) pre_slots[SynthGrammar::slot_of(p.tag)].push_back(&p);
    for (const auto& [slot, opts] : pre_slots) {
      if (coin(g_.probability(slot), rng)) {
        const SynthMorph& m = pick(opts, rng);
        segs.push_back({m.surface, m.tag});
      }
    }
    segs.push_back({root.surface, root.tag});

    for (size_t d = 0; d < g_.max_derivations; ++d) {
      std::map<std::string, std::vector<const SynthMorph*>> slots;
      for (const auto& s : g_.suffixes) {
        if (s.tag.is_derivational() && detail::pos_of(s.tag) != pos) {
          slots[SynthGrammar::slot_of(s.tag)].push_back(&s);
        }
      }
      bool attached = false;
      for (const auto& [slot, opts] : slots) {
        if (coin(g_.probability(slot), rng)) {
          const SynthMorph& m = pick(opts, rng);
          segs.push_back({m.surface, m.tag});
          pos = detail::pos_of(m.tag);
          attached = true;
          break;
        }
      }
      if (!attached) break;
    }

    std::map<std::string, std::vector<const SynthMorph*>> by_feature;
    for (const auto& s : g_.suffixes) {
      if (s.tag.is_inflectional() && detail::pos_of(s.tag) == pos) {
        by_feature[detail::feature_of(s.tag)].push_back(&s);
      }
    }
    std::set<std::string> feats;
    for (const auto& [f, v] : by_feature) feats.insert(f);
    for (const auto& f : detail::order_features(feats, g_.order)) {
      const auto& opts = by_feature[f];
      if (coin(g_.probability(SynthGrammar::slot_of(opts.front()->tag)), rng)) {
        const SynthMorph& m = pick(opts, rng);
        segs.push_back({m.surface, m.tag});
      }
    }
    std::u32string word;
    for (const auto& s : segs) word += s.text;
    return LabeledSegmentation(word, std::move(segs));
  }

  SynthGrammar g_;
  Dataset generated_;
};

inline Dataset generate(const SynthGrammar& grammar, size_t n_types) {
  SynthGenerator gen(grammar);
  return gen.generate(n_types);
}

/// Suffix and prefix surfaces of the grammar as a gazetteer.
inline AffixGazetteer grammar_gazetteer(const SynthGrammar& g) {
  AffixGazetteer gaz;
  for (const auto& s : g.suffixes) gaz.suffixes.insert(s.surface);
  for (const auto& p : g.prefixes) gaz.prefixes.insert(p.surface);
  return gaz;
}

/// Root surfaces of the grammar as a dictionary.
inline DictionarySet grammar_dictionary(const SynthGrammar& g) {
  DictionarySet d;
  for (const auto& r : g.roots) d.insert(r.surface);
  return d;
}

/// Splits a dataset by ratio weights (e.g. 8:1:1:2) in its current order.
inline std::vector<Dataset> split_by_ratio(const Dataset& data,
                                           const std::vector<size_t>& ratio) {
  size_t total = 0;
  for (size_t r : ratio) total += r;
  if (total == 0) throw DataError("split ratio sums to zero");
  std::vector<Dataset> out;
  size_t pos = 0, acc = 0;
  for (size_t i = 0; i < ratio.size(); ++i) {
    acc += ratio[i];
    const size_t end = i + 1 == ratio.size() ? data.size() : data.size() * acc / total;
    Dataset part(Role::Train);
    for (; pos < end; ++pos) part.add(data[pos]);
    out.push_back(std::move(part));
  }
  out[0].set_role(Role::Train);
  if (out.size() > 1) out[1].set_role(Role::Tune);
  if (out.size() > 2) out[2].set_role(Role::Dev);
  if (out.size() > 3) out[3].set_role(Role::Test);
  return out;
}

/// Agglutinative test grammar: `n_roots` roots split over NOUN and VERB,
/// twelve suffix tags with two allomorphs each, NUMBER < POSSESSIVE < CASE
/// and TENSE < PERSON. The derivational suffixes are spelled like
/// inflection sequences of the other part of speech (dim = di + m,
/// lerim = ler + im), so the split after a root depends on the root's
/// category rather than on nearby characters.
inline SynthGrammar agglutinative_grammar(uint64_t seed, size_t n_roots = 50) {
  SynthGrammar g;
  g.seed = seed;
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  const std::u32string onsets[] = {U"t", U"k", U"p", U"s", U"m", U"b", U"g",
                                   U"d", U"y", U"ç", U"r", U"n", U"z", U"v"};
  const std::u32string vowels[] = {U"a", U"e", U"i", U"o", U"u", U"ı", U"ö", U"ü"};
  const std::u32string codas[] = {U"", U"", U"k", U"r", U"l", U"t", U"n", U"ş", U"m"};
  std::set<std::u32string> used;
  auto pick_of = [&](const auto& arr) {
    return arr[std::uniform_int_distribution<size_t>(0, std::size(arr) - 1)(rng)];
  };
  for (size_t i = 0; i < n_roots; ++i) {
    std::u32string r;
    do {
      r.clear();
      size_t syl = 1 + std::uniform_int_distribution<size_t>(0, 1)(rng);
      for (size_t s = 0; s < syl; ++s) {
        r += pick_of(onsets) + pick_of(vowels) + pick_of(codas);
      }
    } while (r.size() < 3 || used.count(r));
    used.insert(r);
    const char* pos = i % 2 == 0 ? "ROOT:NOUN" : "ROOT:VERB";
    g.roots.push_back({MorphTag::parse(pos), r, 1.0 / std::sqrt(1.0 + i / 2)});
  }
  auto suffix = [&](const char* tag, std::u32string a, std::u32string b) {
    g.suffixes.push_back({MorphTag::parse(tag), std::move(a), 1.0});
    g.suffixes.push_back({MorphTag::parse(tag), std::move(b), 1.0});
  };
  suffix("SUFFIX:DERIV:NOUN", U"lerim", U"larım");
  suffix("SUFFIX:DERIV:VERB", U"dim", U"dık");
  suffix("SUFFIX:INFL:NOUN:NUMBER:PLURAL", U"ler", U"lar");
  suffix("SUFFIX:INFL:NOUN:POSSESSIVE:FIRST", U"im", U"ım");
  suffix("SUFFIX:INFL:NOUN:CASE:GENITIVE", U"in", U"ın");
  suffix("SUFFIX:INFL:NOUN:CASE:DATIVE", U"e", U"a");
  suffix("SUFFIX:INFL:NOUN:CASE:LOCATIVE", U"de", U"da");
  suffix("SUFFIX:INFL:NOUN:CASE:ABLATIVE", U"den", U"dan");
  suffix("SUFFIX:INFL:VERB:TENSE:PAST", U"di", U"dı");
  suffix("SUFFIX:INFL:VERB:TENSE:FUTURE", U"ecek", U"acak");
  suffix("SUFFIX:INFL:VERB:PERSON:FIRST", U"m", U"k");
  suffix("SUFFIX:INFL:VERB:PERSON:SECOND", U"n", U"niz");
  g.slot_probability["SUFFIX:DERIV:NOUN"] = 0.5;
  g.slot_probability["SUFFIX:DERIV:VERB"] = 0.5;
  g.slot_probability["SUFFIX:INFL:NOUN:NUMBER"] = 0.5;
  g.slot_probability["SUFFIX:INFL:NOUN:POSSESSIVE"] = 0.4;
  g.slot_probability["SUFFIX:INFL:NOUN:CASE"] = 0.7;
  g.slot_probability["SUFFIX:INFL:VERB:TENSE"] = 0.8;
  g.slot_probability["SUFFIX:INFL:VERB:PERSON"] = 0.7;
  g.order = {{"NUMBER", "POSSESSIVE"},
             {"POSSESSIVE", "CASE"},
             {"NUMBER", "CASE"},
             {"TENSE", "PERSON"}};
  return g;
}

}  // namespace lmseg
