#pragma once

// Label words for each mask slot, and label probabilities from MLM logits.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ecr/encoder.hpp"
#include "ecr/errors.hpp"
#include "ecr/template.hpp"

namespace ecr {

struct Verbalizer {
  std::string name;
  std::vector<std::string> labels;
  std::vector<int> token_ids;
  std::vector<std::vector<int>> descriptions;  // empty for real vocabulary words

  int size() const { return static_cast<int>(labels.size()); }

  int label_index(const std::string& label) const {
    auto it = std::find(labels.begin(), labels.end(), label);
    if (it == labels.end()) throw LookupError("verbalizer " + name + " has no label '" + label + "'");
    return static_cast<int>(it - labels.begin());
  }
};

// Lowercased pieces of a label split on anything that is not a letter or digit:
// "Justice.Arrest-Jail" -> {justice, arrest, jail}.
inline std::vector<std::string> type_description_words(const std::string& event_type) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : event_type) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

inline const std::vector<std::string>& compatible_words() {
  static const std::vector<std::string> w = {"same", "related", "relevant", "similar", "matching", "matched"};
  return w;
}

inline const std::vector<std::string>& incompatible_words() {
  static const std::vector<std::string> w = {"different", "unrelated", "irrelevant", "dissimilar", "mismatched"};
  return w;
}

// Connect template label descriptions: "refer to" / "not refer to".
inline const std::vector<std::string>& connect_refer_words() {
  static const std::vector<std::string> w = {"refer", "to"};
  return w;
}
inline const std::vector<std::string>& connect_not_refer_words() {
  static const std::vector<std::string> w = {"not", "refer", "to"};
  return w;
}

// Real words every verbalizer may need in the vocabulary.
inline std::vector<std::string> label_words(const std::vector<std::string>& event_types) {
  std::vector<std::string> out = compatible_words();
  out.insert(out.end(), incompatible_words().begin(), incompatible_words().end());
  out.insert(out.end(), {"yes", "no", "not", "refer", "to"});
  for (const auto& t : event_types) {
    const auto w = type_description_words(t);
    out.insert(out.end(), w.begin(), w.end());
  }
  return out;
}

inline std::vector<int> description_ids(const std::vector<std::string>& words, const Vocabulary& vocab) {
  std::vector<int> ids;
  for (const auto& w : words) {
    const int id = vocab.word_id(w);
    if (id != vocab.unk()) ids.push_back(id);
  }
  return ids;
}

struct VerbalizerSet {
  Verbalizer type;          // one virtual word per event type
  Verbalizer compat;        // compatible / incompatible (type-compat slot, and arg slot when shared)
  Verbalizer arg_compat;    // separate pair when not shared
  Verbalizer coref;         // Coref / Non-Coref
  bool shared_compat = true;

  const Verbalizer& arg() const { return shared_compat ? compat : arg_compat; }

  std::vector<const Verbalizer*> all() const {
    std::vector<const Verbalizer*> out;
    for (const Verbalizer* v : {&type, &compat, &arg_compat, &coref}) {
      if (v->size() > 0) out.push_back(v);
    }
    return out;
  }
};

inline constexpr const char* kCorefLabel = "Coref";
inline constexpr const char* kNonCorefLabel = "Non-Coref";

namespace detail {

inline void add_virtual_label(Verbalizer& v, const std::string& label, const std::string& token_name,
                              const std::vector<std::string>& words, Vocabulary& vocab, EncoderState& state) {
  auto ids = description_ids(words, vocab);
  if (ids.empty()) {
    throw ConfigError("label '" + label + "' has a description with no in-vocabulary tokens");
  }
  const int id = add_virtual_token(vocab, token_name, ids, state);
  v.labels.push_back(label);
  v.token_ids.push_back(id);
  v.descriptions.push_back(std::move(ids));
}

}  // namespace detail

// Registers virtual label words (event types, compatible/incompatible) and maps
// the coreference labels to the real words "same" / "different".
inline VerbalizerSet build_verbalizers(const std::vector<std::string>& event_types, Vocabulary& vocab,
                                       EncoderState& state, bool shared_compat = true) {
  if (event_types.empty()) throw ConfigError("build_verbalizers: no event types");
  VerbalizerSet set;
  set.shared_compat = shared_compat;
  set.type.name = "type";
  for (const auto& t : event_types) {
    detail::add_virtual_label(set.type, t, "<type:" + t + ">", type_description_words(t), vocab, state);
  }
  set.compat.name = "compat";
  detail::add_virtual_label(set.compat, "compatible", "<compatible>", compatible_words(), vocab, state);
  detail::add_virtual_label(set.compat, "incompatible", "<incompatible>", incompatible_words(), vocab, state);
  if (!shared_compat) {
    set.arg_compat.name = "arg_compat";
    detail::add_virtual_label(set.arg_compat, "compatible", "<arg-compatible>", compatible_words(), vocab, state);
    detail::add_virtual_label(set.arg_compat, "incompatible", "<arg-incompatible>", incompatible_words(), vocab,
                              state);
  }
  set.coref.name = "coref";
  set.coref.labels = {kCorefLabel, kNonCorefLabel};
  set.coref.token_ids = {vocab.require_word("same"), vocab.require_word("different")};
  set.coref.descriptions = {{}, {}};
  return set;
}

// Coreference verbalizer for the single-slot baselines: "same"/"different" for
// Normal and Soft, "yes"/"no" for Question, and virtual words described by
// "refer to"/"not refer to" for Connect.
inline Verbalizer build_baseline_verbalizer(TemplateVariant variant, Vocabulary& vocab, EncoderState& state) {
  Verbalizer v;
  v.name = "coref";
  switch (variant) {
    case TemplateVariant::Connect:
      detail::add_virtual_label(v, kCorefLabel, "<refer>", connect_refer_words(), vocab, state);
      detail::add_virtual_label(v, kNonCorefLabel, "<not-refer>", connect_not_refer_words(), vocab, state);
      return v;
    case TemplateVariant::Question:
      v.token_ids = {vocab.require_word("yes"), vocab.require_word("no")};
      break;
    case TemplateVariant::Normal:
    case TemplateVariant::Soft:
      v.token_ids = {vocab.require_word("same"), vocab.require_word("different")};
      break;
    case TemplateVariant::CorefPrompt:
      throw ArgumentError("CorefPrompt uses build_verbalizers");
  }
  v.labels = {kCorefLabel, kNonCorefLabel};
  v.descriptions = {{}, {}};
  return v;
}

// Rebuilds a verbalizer from a vocabulary that already holds its tokens
// (used when loading a saved model).
inline Verbalizer lookup_verbalizer(const std::string& name, const std::vector<std::string>& labels,
                                    const std::vector<std::string>& token_names, const Vocabulary& vocab) {
  Verbalizer v;
  v.name = name;
  v.labels = labels;
  for (const auto& t : token_names) {
    const auto id = vocab.find(t);
    if (!id) throw LookupError("vocabulary lacks label token '" + t + "'");
    v.token_ids.push_back(*id);
    v.descriptions.push_back(vocab.description(*id));
  }
  return v;
}

// Softmax over the label-word logits only.
inline Eigen::VectorXd score_labels(const Eigen::RowVectorXd& logits, const Verbalizer& verbalizer) {
  Eigen::VectorXd picked(verbalizer.size());
  for (int k = 0; k < verbalizer.size(); ++k) {
    const int id = verbalizer.token_ids[static_cast<std::size_t>(k)];
    if (id < 0 || id >= logits.size()) {
      throw ShapeError("score_labels: label id " + std::to_string(id) + " outside logits of length " +
                       std::to_string(logits.size()));
    }
    picked(k) = logits(id);
  }
  const double mx = picked.maxCoeff();
  Eigen::VectorXd p = (picked.array() - mx).exp();
  return p / p.sum();
}

inline void write_verbalizers(std::ostream& out, const VerbalizerSet& set, const Vocabulary& vocab) {
  for (const Verbalizer* v : set.all()) {
    for (int k = 0; k < v->size(); ++k) {
      const auto& desc = v->descriptions[static_cast<std::size_t>(k)];
      out << v->name << '\t' << v->labels[static_cast<std::size_t>(k)] << '\t' << v->token_ids[static_cast<std::size_t>(k)]
          << '\t';
      for (std::size_t i = 0; i < desc.size(); ++i) out << (i ? " " : "") << vocab.token(desc[i]);
      out << '\n';
    }
  }
}

}  // namespace ecr
