#pragma once

// Hierarchical morphotactic tags, projection between granularity levels,
// and the views derived from a labeled segmentation (unlabeled segments,
// roots, stem, inflectional bundle).

#include <algorithm>
#include <compare>
#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lmseg/error.hpp"
#include "lmseg/unicode.hpp"

namespace lmseg {

inline constexpr int kMaxLevel = 5;
inline constexpr size_t kMaxComponents = 5;

/// Granularity level of a tagset, 0 (bare segments) through 5 (feature
/// values).
class TagsetLevel {
 public:
  constexpr TagsetLevel() = default;
  explicit TagsetLevel(int level) : level_(level) {
    if (level < 0 || level > kMaxLevel) {
      throw ParseError("tagset level out of range [0, 5]: " +
                       std::to_string(level));
    }
  }
  constexpr int value() const { return level_; }
  auto operator<=>(const TagsetLevel&) const = default;

 private:
  int level_ = 0;
};

enum class Position { Prefix, Root, Suffix, Unknown, Segment };

/// A path in the tag hierarchy, e.g. SUFFIX:INFL:NOUN:NUMBER:PLURAL.
/// Instances are always valid; construct through parse().
class MorphTag {
 public:
  MorphTag() : components_{"SEGMENT"} {}

  static MorphTag parse(std::string_view text);
  static MorphTag from_components(std::vector<std::string> components);

  static MorphTag segment() { return MorphTag(); }
  static MorphTag root() { return from_components({"ROOT"}); }

  const std::vector<std::string>& components() const { return components_; }
  size_t depth() const { return components_.size(); }

  Position position() const {
    const std::string& c = components_.front();
    if (c == "PREFIX") return Position::Prefix;
    if (c == "ROOT") return Position::Root;
    if (c == "SUFFIX") return Position::Suffix;
    if (c == "UNKNOWN") return Position::Unknown;
    return Position::Segment;
  }
  bool is_root() const { return position() == Position::Root; }
  bool is_affix() const {
    return position() == Position::Prefix || position() == Position::Suffix;
  }
  bool is_derivational() const {
    return is_affix() && depth() >= 2 && components_[1] == "DERIV";
  }
  bool is_inflectional() const {
    return is_affix() && depth() >= 2 && components_[1] == "INFL";
  }

  std::string to_string() const {
    std::string out = components_.front();
    for (size_t i = 1; i < components_.size(); ++i) {
      out += ':';
      out += components_[i];
    }
    return out;
  }

  auto operator<=>(const MorphTag&) const = default;
  bool operator==(const MorphTag&) const = default;

 private:
  explicit MorphTag(std::vector<std::string> components)
      : components_(std::move(components)) {}

  std::vector<std::string> components_;
};

namespace detail {

inline bool is_tag_token(std::string_view c) {
  if (c.empty() || c.front() < 'A' || c.front() > 'Z') return false;
  return std::all_of(c.begin(), c.end(), [](char ch) {
    return (ch >= 'A' && ch <= 'Z') || (ch >= '0' && ch <= '9') || ch == '_';
  });
}

}  // namespace detail

inline MorphTag MorphTag::from_components(std::vector<std::string> comps) {
  auto fail = [&](const std::string& why) -> MorphTag {
    std::string joined;
    for (size_t i = 0; i < comps.size(); ++i) {
      if (i) joined += ':';
      joined += comps[i];
    }
    throw ParseError("invalid tag '" + joined + "': " + why);
  };
  if (comps.empty()) return fail("empty tag");
  if (comps.size() > kMaxComponents) {
    return fail("more than 5 components (offending component '" +
                comps[kMaxComponents] + "')");
  }
  for (const auto& c : comps) {
    if (!detail::is_tag_token(c)) {
      return fail("component '" + c + "' is not an uppercase token");
    }
  }
  const std::string& head = comps.front();
  if (head == "SEGMENT" || head == "UNKNOWN") {
    if (comps.size() > 1) {
      return fail(head + " takes no sub-components (offending component '" +
                  comps[1] + "')");
    }
  } else if (head == "ROOT") {
    if (comps.size() > 1 && (comps[1] == "DERIV" || comps[1] == "INFL")) {
      return fail("component '" + comps[1] + "' is not allowed under ROOT");
    }
    if (comps.size() > 2) {
      return fail("ROOT carries at most a POS (offending component '" +
                  comps[2] + "')");
    }
  } else if (head == "PREFIX" || head == "SUFFIX") {
    if (comps.size() > 1 && comps[1] != "DERIV" && comps[1] != "INFL") {
      return fail("component '" + comps[1] + "' must be DERIV or INFL");
    }
  } else {
    return fail("unknown position class '" + head + "'");
  }
  return MorphTag(std::move(comps));
}

inline MorphTag MorphTag::parse(std::string_view text) {
  if (text.empty()) throw ParseError("empty tag");
  std::vector<std::string> comps;
  for (auto part : split(text, ':')) {
    if (part.empty()) {
      throw ParseError("invalid tag '" + std::string(text) +
                       "': empty component at position " +
                       std::to_string(comps.size() + 1));
    }
    comps.emplace_back(part);
  }
  return from_components(std::move(comps));
}

/// Truncates a tag to the given level. Level 0 yields SEGMENT; ROOT keeps
/// its POS only from level 3 on; affixes keep min(level, depth) components.
inline MorphTag project(const MorphTag& tag, TagsetLevel level) {
  const int lv = level.value();
  if (lv == 0) return MorphTag::segment();
  std::vector<std::string> comps = tag.components();
  size_t keep = comps.size();
  switch (tag.position()) {
    case Position::Segment:
    case Position::Unknown:
      keep = 1;
      break;
    case Position::Root:
      keep = std::min(comps.size(), lv >= 3 ? size_t{2} : size_t{1});
      break;
    case Position::Prefix:
    case Position::Suffix:
      keep = std::min(comps.size(), static_cast<size_t>(lv));
      break;
  }
  comps.resize(keep);
  return MorphTag::from_components(std::move(comps));
}

struct Segment {
  std::u32string text;
  MorphTag tag;

  bool operator==(const Segment&) const = default;
};

/// A word split into contiguous labeled segments whose concatenation is the
/// word.
class LabeledSegmentation {
 public:
  LabeledSegmentation() = default;

  /// Validates the concatenation and positive-length invariants.
  LabeledSegmentation(std::u32string word, std::vector<Segment> segments)
      : word_(std::move(word)), segments_(std::move(segments)) {
    std::u32string joined;
    for (const auto& s : segments_) {
      if (s.text.empty()) throw DataError("empty segment in analysis");
      joined += s.text;
    }
    if (joined != word_) {
      throw DataError("segments concatenate to '" + to_utf8(joined) +
                      "', expected '" + to_utf8(word_) + "'");
    }
  }

  /// Builds from segment lengths over `word`.
  static LabeledSegmentation from_lengths(const std::u32string& word,
                                          const std::vector<size_t>& lengths,
                                          const std::vector<MorphTag>& tags) {
    std::vector<Segment> segs;
    size_t pos = 0;
    for (size_t i = 0; i < lengths.size(); ++i) {
      if (pos + lengths[i] > word.size()) {
        throw DataError("segment lengths exceed word length");
      }
      segs.push_back({word.substr(pos, lengths[i]), tags.at(i)});
      pos += lengths[i];
    }
    return LabeledSegmentation(word, std::move(segs));
  }

  const std::u32string& word() const { return word_; }
  const std::vector<Segment>& segments() const { return segments_; }
  size_t size() const { return segments_.size(); }

  /// Internal split positions in codepoints, strictly increasing.
  std::vector<size_t> boundaries() const {
    std::vector<size_t> out;
    size_t pos = 0;
    for (size_t i = 0; i + 1 < segments_.size(); ++i) {
      pos += segments_[i].text.size();
      out.push_back(pos);
    }
    return out;
  }

  std::vector<size_t> lengths() const {
    std::vector<size_t> out;
    for (const auto& s : segments_) out.push_back(s.text.size());
    return out;
  }

  LabeledSegmentation projected(TagsetLevel level) const {
    LabeledSegmentation out = *this;
    for (auto& s : out.segments_) s.tag = project(s.tag, level);
    return out;
  }

  /// `morph:TAG` tokens joined by spaces (the corpus analysis format).
  std::string to_string() const {
    std::string out;
    for (size_t i = 0; i < segments_.size(); ++i) {
      if (i) out += ' ';
      out += to_utf8(segments_[i].text);
      out += ':';
      out += segments_[i].tag.to_string();
    }
    return out;
  }

  bool operator==(const LabeledSegmentation&) const = default;

 private:
  std::u32string word_;
  std::vector<Segment> segments_;
};

/// The label inventory at one granularity level, in sorted order; a tag's
/// rank is its label index.
class Tagset {
 public:
  Tagset() : level_(0), tags_{MorphTag::segment()} { reindex(); }
  Tagset(TagsetLevel level, std::vector<MorphTag> tags)
      : level_(level), tags_(std::move(tags)) {
    for (auto& t : tags_) t = project(t, level_);
    std::sort(tags_.begin(), tags_.end());
    tags_.erase(std::unique(tags_.begin(), tags_.end()), tags_.end());
    reindex();
  }

  TagsetLevel level() const { return level_; }
  size_t size() const { return tags_.size(); }
  const std::vector<MorphTag>& tags() const { return tags_; }
  const MorphTag& at(size_t i) const { return tags_.at(i); }
  const std::string& name(size_t i) const { return names_.at(i); }

  std::optional<size_t> index_of(const MorphTag& tag) const {
    auto it = index_.find(tag.to_string());
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

 private:
  void reindex() {
    names_.clear();
    index_.clear();
    for (size_t i = 0; i < tags_.size(); ++i) {
      names_.push_back(tags_[i].to_string());
      index_.emplace(names_.back(), i);
    }
  }

  TagsetLevel level_;
  std::vector<MorphTag> tags_;
  std::vector<std::string> names_;
  std::unordered_map<std::string, size_t> index_;
};

/// Distinct projections of every gold label in `analyses`.
template <typename Range>
Tagset build_tagset(const Range& analyses, TagsetLevel level) {
  std::vector<MorphTag> tags;
  for (const LabeledSegmentation& ls : analyses) {
    for (const auto& s : ls.segments()) tags.push_back(project(s.tag, level));
  }
  if (level.value() == 0) tags = {MorphTag::segment()};
  return Tagset(level, std::move(tags));
}

/// Feature-bearing inflectional components in segment order: the last
/// component of every INFL affix labeled at level 4 or 5 (feature name at
/// level 4, value at level 5). Non-inflectional segments are ignored, so
/// SEGMENT-tagged stems are allowed.
inline std::vector<std::string> inflection_bundle(
    const LabeledSegmentation& ls) {
  std::vector<std::string> out;
  for (const auto& s : ls.segments()) {
    if (!s.tag.is_inflectional() || s.tag.depth() < 4) continue;
    const std::string& last = s.tag.components().back();
    if (last != "NONE") out.push_back(last);
  }
  return out;
}

/// Ordered bundle serialized as its components joined by ':'.
inline std::string bundle_string(const std::vector<std::string>& bundle) {
  std::string out;
  for (size_t i = 0; i < bundle.size(); ++i) {
    if (i) out += ':';
    out += bundle[i];
  }
  return out;
}

inline std::vector<std::u32string> unlabeled_segments(
    const LabeledSegmentation& ls) {
  std::vector<std::u32string> out;
  for (const auto& s : ls.segments()) out.push_back(s.text);
  return out;
}

/// Root substrings in surface order; needs labels of level 1 or finer.
inline std::vector<std::u32string> root_segments(
    const LabeledSegmentation& ls) {
  std::vector<std::u32string> out;
  for (const auto& s : ls.segments()) {
    if (s.tag.position() == Position::Segment) {
      throw GranularityError("root view needs level >= 1 labels");
    }
    if (s.tag.is_root()) out.push_back(s.text);
  }
  return out;
}

/// Roots and derivational affixes concatenated in surface order; needs
/// every affix to be marked DERIV or INFL (level 2 or finer).
inline std::u32string stem_of(const LabeledSegmentation& ls) {
  std::u32string out;
  for (const auto& s : ls.segments()) {
    if (s.tag.position() == Position::Segment ||
        (s.tag.is_affix() && s.tag.depth() < 2)) {
      throw GranularityError(
          "stem view needs level >= 2 labels (got '" + s.tag.to_string() +
          "')");
    }
    if (s.tag.is_root() || s.tag.is_derivational()) out += s.text;
  }
  return out;
}

struct Views {
  std::vector<std::u32string> ums;
  std::vector<std::u32string> roots;
  std::u32string stem;
  std::vector<std::string> morph_tag;
  /// Deepest INFL label seen (4 = feature names, 5 = values, else lower).
  int morph_tag_level = 0;
};

inline Views derive_views(const LabeledSegmentation& ls) {
  Views v;
  v.ums = unlabeled_segments(ls);
  v.roots = root_segments(ls);
  v.stem = stem_of(ls);
  v.morph_tag = inflection_bundle(ls);
  for (const auto& s : ls.segments()) {
    if (s.tag.is_inflectional()) {
      v.morph_tag_level =
          std::max(v.morph_tag_level, static_cast<int>(s.tag.depth()));
    }
  }
  return v;
}

}  // namespace lmseg
