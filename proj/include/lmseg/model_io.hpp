#pragma once

// Model persistence and resource loading.
//
// File layout: a text header line "LMSEG-MODEL <version> <kind>\n" followed
// by sections, each a 4-byte name, a little-endian uint64 payload length and
// the payload. Sections end with "END ".

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lmseg/baselines.hpp"
#include "lmseg/corpus.hpp"
#include "lmseg/error.hpp"
#include "lmseg/features.hpp"
#include "lmseg/semicrf.hpp"
#include "lmseg/training.hpp"

namespace lmseg {

inline constexpr int kModelFormatVersion = 1;
inline constexpr std::string_view kModelMagic = "LMSEG-MODEL";

static_assert(std::endian::native == std::endian::little,
              "model files store raw little-endian doubles");

// ---------------------------------------------------------------------------
// Resources

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string fingerprint(std::string_view bytes) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(bytes)));
  return buf;
}

/// Loads whichever of the gazetteer, dictionary and LSV word list have a
/// non-empty path and records each file's fingerprint.
inline Resources load_resources(const std::string& gazetteer_path,
                                const std::string& dictionary_path,
                                const std::string& lsv_path,
                                const Normalization& norm = {}) {
  Resources r;
  if (!gazetteer_path.empty()) {
    std::string bytes = read_file(gazetteer_path);
    std::istringstream in(bytes);
    r.gazetteer = std::make_shared<AffixGazetteer>(load_gazetteer(in, norm));
    r.gazetteer_source = {gazetteer_path, fingerprint(bytes)};
  }
  if (!dictionary_path.empty()) {
    std::string bytes = read_file(dictionary_path);
    std::istringstream in(bytes);
    r.dictionary = std::make_shared<DictionarySet>(load_dictionary(in, norm));
    r.dictionary_source = {dictionary_path, fingerprint(bytes)};
  }
  if (!lsv_path.empty()) {
    std::string bytes = read_file(lsv_path);
    std::istringstream in(bytes);
    Dataset words = load_word_list(in, norm);
    std::vector<std::u32string> list;
    for (const auto& e : words.entries()) list.push_back(e.word);
    r.lsv = std::make_shared<LsvTable>(LsvTable::build(list));
    r.lsv_source = {lsv_path, fingerprint(bytes)};
  }
  return r;
}

// ---------------------------------------------------------------------------
// Config <-> JSON

inline nlohmann::ordered_json to_json(const FeatureConfig& f) {
  nlohmann::ordered_json j;
  j["max_context_ngram"] = f.max_context_ngram;
  j["use_affix"] = f.use_affix;
  j["use_dict"] = f.use_dict;
  j["use_conjunction"] = f.use_conjunction;
  j["use_lsv"] = f.use_lsv;
  j["lsv_thresholds"] = f.lsv_thresholds;
  j["max_segment_length"] = f.max_segment_length;
  return j;
}

inline FeatureConfig feature_config_from_json(const nlohmann::json& j) {
  FeatureConfig f;
  f.max_context_ngram = j.at("max_context_ngram").get<int>();
  f.use_affix = j.at("use_affix").get<bool>();
  f.use_dict = j.at("use_dict").get<bool>();
  f.use_conjunction = j.at("use_conjunction").get<bool>();
  f.use_lsv = j.at("use_lsv").get<bool>();
  f.lsv_thresholds = j.at("lsv_thresholds").get<std::vector<int>>();
  f.max_segment_length = j.at("max_segment_length").get<int>();
  f.validate();
  return f;
}

inline nlohmann::ordered_json to_json(const TrainConfig& c) {
  nlohmann::ordered_json j;
  j["l2"] = c.l2;
  j["lbfgs_history"] = c.lbfgs_history;
  j["max_iterations"] = c.max_iterations;
  j["tolerance"] = c.tolerance;
  j["seed"] = c.seed;
  j["level"] = c.level;
  j["marginalize_golds"] = c.marginalize_golds;
  j["features"] = to_json(c.features);
  return j;
}

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.l2 = j.at("l2").get<double>();
  c.lbfgs_history = j.at("lbfgs_history").get<size_t>();
  c.max_iterations = j.at("max_iterations").get<size_t>();
  c.tolerance = j.at("tolerance").get<double>();
  c.seed = j.at("seed").get<uint64_t>();
  c.level = j.at("level").get<int>();
  c.marginalize_golds = j.at("marginalize_golds").get<bool>();
  c.features = feature_config_from_json(j.at("features"));
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Container

namespace detail {

inline void write_section(std::ostream& out, std::string_view name,
                          std::string_view payload) {
  out.write(name.data(), 4);
  uint64_t len = payload.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof len);
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
}

inline std::string join_lines(const std::vector<std::string>& items) {
  std::string s;
  for (const auto& x : items) {
    if (x.find('\n') != std::string::npos) {
      throw DataError("cannot store string containing a newline");
    }
    s += x;
    s += '\n';
  }
  return s;
}

inline std::vector<std::string> split_lines(const std::string& s) {
  std::vector<std::string> out;
  size_t pos = 0;
  while (pos < s.size()) {
    size_t nl = s.find('\n', pos);
    if (nl == std::string::npos) throw ParseError("truncated string list");
    out.push_back(s.substr(pos, nl - pos));
    pos = nl + 1;
  }
  return out;
}

inline std::string pack_doubles(const std::vector<double>& v) {
  std::string s(v.size() * sizeof(double), '\0');
  if (!v.empty()) std::memcpy(s.data(), v.data(), s.size());
  return s;
}

inline std::vector<double> unpack_doubles(const std::string& s) {
  if (s.size() % sizeof(double)) throw ParseError("weight section is corrupt");
  std::vector<double> v(s.size() / sizeof(double));
  if (!v.empty()) std::memcpy(v.data(), s.data(), s.size());
  return v;
}

struct Container {
  std::string kind;
  std::map<std::string, std::string> sections;

  const std::string& at(const std::string& name) const {
    auto it = sections.find(name);
    if (it == sections.end()) throw ParseError("model file lacks section " + name);
    return it->second;
  }
};

inline void write_header(std::ostream& out, std::string_view kind) {
  out << kModelMagic << ' ' << kModelFormatVersion << ' ' << kind << '\n';
}

inline Container read_container(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw ParseError("empty model file");
  std::istringstream hs(header);
  std::string magic, kind;
  int version = -1;
  hs >> magic >> version >> kind;
  if (magic != kModelMagic) throw ParseError("not a model file");
  if (version != kModelFormatVersion) {
    throw ParseError("model format version " + std::to_string(version) +
                     " is not supported (expected " +
                     std::to_string(kModelFormatVersion) + ")");
  }
  Container c{kind, {}};
  while (true) {
    char name[4];
    uint64_t len = 0;
    if (!in.read(name, 4) || !in.read(reinterpret_cast<char*>(&len), sizeof len)) {
      throw ParseError("truncated model file");
    }
    std::string sname(name, 4);
    if (sname == "END ") break;
    std::string payload(len, '\0');
    if (!in.read(payload.data(), static_cast<std::streamsize>(len))) {
      throw ParseError("truncated section " + sname);
    }
    c.sections.emplace(sname, std::move(payload));
  }
  return c;
}

inline nlohmann::ordered_json sources_json(const Resources& r) {
  nlohmann::ordered_json j;
  auto put = [&](const char* key, const Resources::Source& s) {
    j[key] = {{"path", s.path}, {"fingerprint", s.fingerprint}};
  };
  put("gazetteer", r.gazetteer_source);
  put("dictionary", r.dictionary_source);
  put("lsv", r.lsv_source);
  return j;
}

}  // namespace detail

/// A semi-CRF model with the configuration it was trained under.
struct SavedModel {
  Model model;
  TrainConfig config;
  Normalization normalization;
  /// Resource files that changed since training (filled by load_model).
  std::vector<std::string> warnings;
};

inline void save_model(std::ostream& out, const Model& model,
                       const TrainConfig& cfg, const Normalization& norm = {}) {
  detail::write_header(out, "semicrf");
  nlohmann::ordered_json conf;
  conf["train"] = to_json(cfg);
  conf["features"] = to_json(model.features);
  conf["casefold"] = norm.casefold;
  detail::write_section(out, "CONF", conf.dump());
  std::vector<std::string> tags{std::to_string(model.tagset.level().value())};
  for (size_t i = 0; i < model.tagset.size(); ++i) tags.push_back(model.tagset.name(i));
  detail::write_section(out, "TAGS", detail::join_lines(tags));
  detail::write_section(out, "VOCB", detail::join_lines(model.vocab.names()));
  detail::write_section(out, "WGHT", detail::pack_doubles(model.weights));
  detail::write_section(out, "FPRT", detail::sources_json(model.resources).dump());
  detail::write_section(out, "END ", "");
}

/// Reads a semi-CRF model and reloads its resources from the recorded
/// paths; a resource whose fingerprint changed produces a warning.
inline SavedModel load_model(std::istream& in) {
  detail::Container c = detail::read_container(in);
  if (c.kind != "semicrf") {
    throw ParseError("model file holds a '" + c.kind + "' model, not semicrf");
  }
  SavedModel out;
  try {
    auto conf = nlohmann::json::parse(c.at("CONF"));
    out.config = train_config_from_json(conf.at("train"));
    out.model.features = feature_config_from_json(conf.at("features"));
    out.normalization.casefold = conf.at("casefold").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad model config: ") + e.what());
  }
  auto tags = detail::split_lines(c.at("TAGS"));
  if (tags.empty()) throw ParseError("empty tagset section");
  std::vector<MorphTag> tag_list;
  for (size_t i = 1; i < tags.size(); ++i) tag_list.push_back(MorphTag::parse(tags[i]));
  out.model.tagset = Tagset(TagsetLevel(std::stoi(tags[0])), tag_list);
  if (out.model.tagset.size() != tag_list.size()) {
    throw ParseError("tagset section is not canonical");
  }
  out.model.vocab = FeatureVocabulary::from_names(detail::split_lines(c.at("VOCB")));
  out.model.weights = detail::unpack_doubles(c.at("WGHT"));
  if (out.model.weights.size() != out.model.vocab.size()) {
    throw ParseError("weight count does not match vocabulary size");
  }

  auto fp = nlohmann::json::parse(c.at("FPRT"));
  auto path_of = [&](const char* key) { return fp.at(key).at("path").get<std::string>(); };
  out.model.resources = load_resources(path_of("gazetteer"), path_of("dictionary"),
                                       path_of("lsv"), out.normalization);
  auto check = [&](const char* key, const Resources::Source& now) {
    const auto saved = fp.at(key).at("fingerprint").get<std::string>();
    if (!now.path.empty() && saved != now.fingerprint) {
      out.warnings.push_back(std::string(key) + " '" + now.path +
                             "' changed since training (fingerprint " + saved +
                             " -> " + now.fingerprint + ")");
    }
  };
  check("gazetteer", out.model.resources.gazetteer_source);
  check("dictionary", out.model.resources.dictionary_source);
  check("lsv", out.model.resources.lsv_source);
  return out;
}

inline void save_model_file(const std::string& path, const Model& model,
                            const TrainConfig& cfg, const Normalization& norm = {}) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  save_model(out, model, cfg, norm);
}

inline SavedModel load_model_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model '" + path + "'");
  return load_model(in);
}

// ---------------------------------------------------------------------------
// MaxEnt classifier

namespace detail {
// The uninflected (empty) bundle is stored as "_".
inline std::string encode_class(const std::string& c) { return c.empty() ? "_" : c; }
inline std::string decode_class(const std::string& c) { return c == "_" ? "" : c; }
}  // namespace detail

inline void save_maxent(std::ostream& out, const MaxEntClassifier& clf,
                        int level = 5) {
  detail::write_header(out, "maxent");
  nlohmann::ordered_json conf;
  conf["max_ngram"] = clf.config.max_ngram;
  conf["regularizer"] = clf.config.regularizer == Regularizer::L1 ? "L1" : "L2";
  conf["coefficient"] = clf.config.coefficient;
  conf["split_mode"] = clf.config.split_mode;
  conf["level"] = level;
  detail::write_section(out, "CONF", conf.dump());
  std::vector<std::string> classes;
  for (const auto& c : clf.classes) classes.push_back(detail::encode_class(c));
  detail::write_section(out, "CLAS", detail::join_lines(classes));
  detail::write_section(out, "UNIT", detail::join_lines(clf.units));
  detail::write_section(out, "VOCB", detail::join_lines(clf.features.names()));
  detail::write_section(out, "WGHT", detail::pack_doubles(clf.weights));
  detail::write_section(out, "END ", "");
}

struct SavedMaxEnt {
  MaxEntClassifier classifier;
  int level = 5;
};

inline SavedMaxEnt load_maxent(std::istream& in) {
  detail::Container c = detail::read_container(in);
  if (c.kind != "maxent") {
    throw ParseError("model file holds a '" + c.kind + "' model, not maxent");
  }
  SavedMaxEnt out;
  auto& clf = out.classifier;
  try {
    auto conf = nlohmann::json::parse(c.at("CONF"));
    clf.config.max_ngram = conf.at("max_ngram").get<int>();
    clf.config.regularizer = conf.at("regularizer").get<std::string>() == "L1"
                                 ? Regularizer::L1
                                 : Regularizer::L2;
    clf.config.coefficient = conf.at("coefficient").get<double>();
    clf.config.split_mode = conf.at("split_mode").get<bool>();
    out.level = conf.at("level").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad model config: ") + e.what());
  }
  for (const auto& s : detail::split_lines(c.at("CLAS"))) {
    clf.classes.push_back(detail::decode_class(s));
  }
  clf.units = detail::split_lines(c.at("UNIT"));
  clf.features = FeatureVocabulary::from_names(detail::split_lines(c.at("VOCB")));
  clf.weights = detail::unpack_doubles(c.at("WGHT"));
  if (clf.weights.size() != clf.features.size() * clf.units.size()) {
    throw ParseError("weight count does not match the parameter layout");
  }
  clf.index_units();
  return out;
}

/// Kind marker ("semicrf" or "maxent") of a model file.
inline std::string model_kind(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model '" + path + "'");
  std::string header;
  std::getline(in, header);
  std::istringstream hs(header);
  std::string magic, kind;
  int version = -1;
  hs >> magic >> version >> kind;
  if (magic != kModelMagic) throw ParseError("'" + path + "' is not a model file");
  return kind;
}

}  // namespace lmseg
