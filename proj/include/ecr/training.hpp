#pragma once

// The prompt model (encoder + matching + verbalizers), its losses, the joint
// objective, the training loop with trigger-mask regularisation, and pairwise
// coreference prediction.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "ecr/autograd.hpp"
#include "ecr/corpus.hpp"
#include "ecr/encoder.hpp"
#include "ecr/matching.hpp"
#include "ecr/optim.hpp"
#include "ecr/parallel.hpp"
#include "ecr/template.hpp"
#include "ecr/verbalizer.hpp"

namespace ecr {

// ---------------------------------------------------------------------------
// Losses.

struct LossBundle {
  double type = 0.0;         // L_s
  double type_compat = 0.0;  // L_t
  double arg_compat = 0.0;   // L_a
  double coref = 0.0;        // L_c
  double compat = 0.0;       // L_m = L_t + L_a
  double joint = 0.0;        // L
};

// sum_i log(1 + L_i) over the event-type, compatibility and coreference losses.
inline double joint_loss(double type_loss, double compat_loss, double coref_loss) {
  for (double l : {type_loss, compat_loss, coref_loss}) {
    if (!(l >= 0.0)) throw ArgumentError("joint_loss: task losses must be non-negative");
  }
  return std::log1p(type_loss) + std::log1p(compat_loss) + std::log1p(coref_loss);
}

// Label distributions at each mask slot for one prompt; absent slots are nullopt.
struct SlotDistributions {
  std::optional<Eigen::VectorXd> type1, type2, type_compat, arg_compat, coref;
};

struct PairLabels {
  std::optional<int> type1, type2;  // indices into the type verbalizer
  std::optional<bool> type_compat;
  std::optional<bool> coref;
};

// Binary verbalizers order the positive label first.
inline int binary_target(bool positive) { return positive ? 0 : 1; }

inline LossBundle compute_losses(std::span<const SlotDistributions> outputs, std::span<const PairLabels> labels) {
  if (outputs.size() != labels.size()) throw DataError("compute_losses: outputs and labels differ in length");
  if (outputs.empty()) throw DataError("compute_losses: empty batch");
  const auto ce = [](const Eigen::VectorXd& p, int target) {
    if (target < 0 || target >= p.size()) throw DataError("compute_losses: label outside distribution");
    return -std::log(std::max(p(target), 1e-300));
  };
  const auto need = [](const auto& opt, const char* what) {
    if (!opt) throw DataError(std::string("compute_losses: missing ") + what + " label");
    return *opt;
  };
  LossBundle b;
  const double n = static_cast<double>(outputs.size());
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    const auto& o = outputs[i];
    const auto& y = labels[i];
    if (o.type1 || o.type2) {
      double s = 0.0;
      int k = 0;
      if (o.type1) s += ce(*o.type1, need(y.type1, "type_1")), ++k;
      if (o.type2) s += ce(*o.type2, need(y.type2, "type_2")), ++k;
      b.type += s / k / n;
    }
    if (o.type_compat) b.type_compat += ce(*o.type_compat, binary_target(need(y.type_compat, "type-compat"))) / n;
    if (o.arg_compat) b.arg_compat += ce(*o.arg_compat, binary_target(need(y.coref, "coref"))) / n;
    if (o.coref) b.coref += ce(*o.coref, binary_target(need(y.coref, "coref"))) / n;
  }
  b.compat = b.type_compat + b.arg_compat;
  b.joint = joint_loss(b.type, b.compat, b.coref);
  return b;
}

// ---------------------------------------------------------------------------
// Model.

struct ModelConfig {
  TemplateVariant variant = TemplateVariant::CorefPrompt;
  EncoderConfig encoder;
  MatchingConfig matching{16, 8, 2};
  int max_length = 512;
  int min_count = 1;
  bool shared_compat = true;
};

inline nlohmann::json to_json(const ModelConfig& c) {
  return {{"variant", to_string(c.variant)}, {"encoder", to_json(c.encoder)}, {"matching", to_json(c.matching)},
          {"max_length", c.max_length}, {"min_count", c.min_count}, {"shared_compat", c.shared_compat}};
}

inline ModelConfig model_config_from_json(const nlohmann::json& j, ModelConfig c = {}) {
  if (j.contains("variant")) c.variant = parse_variant(j.at("variant").get<std::string>());
  if (j.contains("encoder")) c.encoder = encoder_config_from_json(j.at("encoder"), c.encoder);
  if (j.contains("matching")) c.matching = matching_config_from_json(j.at("matching"), c.matching);
  c.max_length = j.value("max_length", c.max_length);
  c.min_count = j.value("min_count", c.min_count);
  c.shared_compat = j.value("shared_compat", c.shared_compat);
  return c;
}

struct Model {
  ModelConfig config;
  Vocabulary vocab;
  EncoderState encoder;
  MatchingParams matching;
  VerbalizerSet verbalizers;  // baselines populate only `coref`
  std::vector<std::string> event_types;

  bool coref_prompt() const { return config.variant == TemplateVariant::CorefPrompt; }

  std::vector<Parameter*> parameters() {
    auto out = encoder.parameters();
    if (coref_prompt()) {
      for (Parameter* p : matching.parameters()) out.push_back(p);
    }
    return out;
  }

  int type_index(const std::string& type) const {
    const auto& labels = verbalizers.type.labels;
    auto it = std::find(labels.begin(), labels.end(), type);
    if (it == labels.end()) throw LookupError("event type '" + type + "' not in the type verbalizer");
    return static_cast<int>(it - labels.begin());
  }
};

// Vocabulary from the training documents plus every template and label word,
// then the encoder, virtual label words and matching parameters.
inline Model build_model(const std::vector<Document>& train_docs, const ModelConfig& config) {
  Vocabulary vocab = build_vocab(train_docs, config.min_count);
  register_template_words(vocab);
  std::vector<std::string> types;
  for (const auto& t : event_types(train_docs)) types.push_back(t);
  for (const auto& w : label_words(types)) vocab.add_word(w);

  EncoderState encoder(config.encoder, vocab.size());
  VerbalizerSet verbalizers;
  if (config.variant == TemplateVariant::CorefPrompt) {
    verbalizers = build_verbalizers(types, vocab, encoder, config.shared_compat);
  } else {
    verbalizers.coref = build_baseline_verbalizer(config.variant, vocab, encoder);
  }
  MatchingParams matching = init_matching(config.matching, config.encoder.hidden, config.encoder.seed + 1);
  return Model{config, std::move(vocab), std::move(encoder), std::move(matching), std::move(verbalizers),
               std::move(types)};
}

struct SlotLogits {
  ag::Var type1, type2, type_compat, arg_compat, coref;
};

// One forward pass over a prompt layout. Type slots are read from the raw
// encoder states; the three inference slots go through the matching update.
inline SlotLogits forward(ag::Graph& g, Model& model, const PromptLayout& layout) {
  ag::Var hidden = encode(g, model.encoder, layout.ids);
  const auto at = [&](Slot s) { return ag::row(hidden, layout.slot(s)); };
  SlotLogits out;
  if (!model.coref_prompt()) {
    out.coref = label_logits(g, model.encoder, at(Slot::Coref), model.verbalizers.coref.token_ids);
    return out;
  }
  if (!layout.anchor_trigger_1 || !layout.anchor_trigger_2) throw LayoutError("CorefPrompt layout without anchors");
  const auto& a1 = *layout.anchor_trigger_1;
  const auto& a2 = *layout.anchor_trigger_2;
  ag::Var type1 = at(Slot::Type1);
  ag::Var type2 = at(Slot::Type2);
  ag::Var event1 = pool_span(g, hidden, a1.start, a1.end, model.matching);
  ag::Var event2 = pool_span(g, hidden, a2.start, a2.end, model.matching);
  UpdatedMasks updated = update_mask_embeddings(g, at(Slot::TypeCompat), at(Slot::ArgCompat), at(Slot::Coref), event1,
                                                event2, type1, type2, model.matching);
  const auto& vs = model.verbalizers;
  out.type1 = label_logits(g, model.encoder, type1, vs.type.token_ids);
  out.type2 = label_logits(g, model.encoder, type2, vs.type.token_ids);
  out.type_compat = label_logits(g, model.encoder, updated.type_compat, vs.compat.token_ids);
  out.arg_compat = label_logits(g, model.encoder, updated.arg_compat, vs.arg().token_ids);
  out.coref = label_logits(g, model.encoder, updated.coref, vs.coref.token_ids);
  return out;
}

inline Eigen::VectorXd softmax(const Matrix& logits_row) {
  Eigen::VectorXd l = logits_row.row(0).transpose();
  Eigen::VectorXd e = (l.array() - l.maxCoeff()).exp();
  return e / e.sum();
}

inline SlotDistributions distributions(const SlotLogits& logits) {
  SlotDistributions d;
  const auto take = [](const ag::Var& v) -> std::optional<Eigen::VectorXd> {
    if (!v.valid()) return std::nullopt;
    return softmax(v.value());
  };
  d.type1 = take(logits.type1);
  d.type2 = take(logits.type2);
  d.type_compat = take(logits.type_compat);
  d.arg_compat = take(logits.arg_compat);
  d.coref = take(logits.coref);
  return d;
}

// Probability of Coref for the pair; every non-coreference slot stays [MASK].
inline double predict_pair(Model& model, const Document& doc, const MentionPair& pair) {
  const PromptLayout layout = assemble_prompt(doc, pair, model.vocab, model.config.variant, model.config.max_length);
  ag::Graph g;
  const SlotLogits logits = forward(g, model, layout);
  return softmax(logits.coref.value())(model.verbalizers.coref.label_index(kCorefLabel));
}

inline std::unordered_map<std::string, const Document*> index_documents(const std::vector<Document>& docs) {
  std::unordered_map<std::string, const Document*> out;
  for (const auto& d : docs) out.emplace(d.doc_id, &d);
  return out;
}

inline std::vector<double> predict_pairs(Model& model, const std::vector<Document>& docs,
                                         const std::vector<MentionPair>& pairs, int threads = 1) {
  const auto index = index_documents(docs);
  std::vector<double> probs(pairs.size());
  parallel_for(pairs.size(), threads, [&](std::size_t i) {
    auto it = index.find(pairs[i].doc_id);
    if (it == index.end()) throw LookupError("no document '" + pairs[i].doc_id + "'");
    probs[i] = predict_pair(model, *it->second, pairs[i]);
  });
  return probs;
}

// ---------------------------------------------------------------------------
// Training.

struct TrainConfig {
  int batch_size = 4;
  int epochs = 10;
  double learning_rate = 5e-4;
  std::uint64_t seed = 42;
  bool trigger_mask = true;
  bool type_loss = true;
  double grad_clip = 1.0;
  int threads = 1;
  bool shuffle_labels = false;  // label-shuffled control: permute coref labels before training
  int warmup_epochs = 0;        // plain MLM pretraining passes before task training
};

inline nlohmann::json to_json(const TrainConfig& c) {
  return {{"batch_size", c.batch_size}, {"epochs", c.epochs}, {"learning_rate", c.learning_rate},
          {"seed", c.seed}, {"trigger_mask", c.trigger_mask}, {"type_loss", c.type_loss},
          {"grad_clip", c.grad_clip}, {"shuffle_labels", c.shuffle_labels}, {"warmup_epochs", c.warmup_epochs}};
}

inline TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig c = {}) {
  c.batch_size = j.value("batch_size", c.batch_size);
  c.epochs = j.value("epochs", c.epochs);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.seed = j.value("seed", c.seed);
  c.trigger_mask = j.value("trigger_mask", c.trigger_mask);
  c.type_loss = j.value("type_loss", c.type_loss);
  c.grad_clip = j.value("grad_clip", c.grad_clip);
  c.shuffle_labels = j.value("shuffle_labels", c.shuffle_labels);
  c.warmup_epochs = j.value("warmup_epochs", c.warmup_epochs);
  return c;
}

struct EpochLog {
  int epoch = 0;
  double type = 0.0;
  double compat = 0.0;
  double coref = 0.0;
  double joint = 0.0;
  double wall_seconds = 0.0;
};

inline nlohmann::json to_json(const EpochLog& e) {
  return {{"epoch", e.epoch}, {"L_s", e.type}, {"L_m", e.compat}, {"L_c", e.coref}, {"L", e.joint},
          {"wall_seconds", e.wall_seconds}};
}

struct TrainingSample {
  const Document* doc = nullptr;
  MentionPair pair;
  PairLabels labels;
  PromptLayout layout;
  PromptLayout masked;  // trigger-masked copy
};

inline std::vector<TrainingSample> prepare_samples(const Model& model, const std::vector<Document>& docs,
                                                   const std::vector<MentionPair>& pairs, bool with_masked) {
  const auto index = index_documents(docs);
  std::vector<TrainingSample> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    auto it = index.find(p.doc_id);
    if (it == index.end()) throw LookupError("no document '" + p.doc_id + "'");
    TrainingSample s;
    s.doc = it->second;
    s.pair = p;
    s.layout = assemble_prompt(*s.doc, p, model.vocab, model.config.variant, model.config.max_length);
    if (with_masked) s.masked = mask_triggers(s.layout, model.vocab);
    s.labels.coref = p.coref_label;
    s.labels.type_compat = p.type_compat_label;
    if (model.coref_prompt()) {
      s.labels.type1 = model.type_index(s.doc->mention(p.first).event_type);
      s.labels.type2 = model.type_index(s.doc->mention(p.second).event_type);
    }
    out.push_back(std::move(s));
  }
  return out;
}

namespace detail {

struct SampleGraph {
  ag::Graph graph;
  ag::Var type, type_compat, arg_compat, coref;  // scalar losses; invalid when absent
};

inline void build_sample_losses(SampleGraph& sg, Model& model, const PromptLayout& layout, const PairLabels& y,
                                bool type_loss) {
  ag::Graph& g = sg.graph;
  const SlotLogits logits = forward(g, model, layout);
  if (model.coref_prompt()) {
    if (type_loss) {
      const std::vector<ag::Var> parts{ag::cross_entropy(logits.type1, *y.type1),
                                       ag::cross_entropy(logits.type2, *y.type2)};
      sg.type = ag::weighted_sum(parts, 0.5);
    }
    sg.type_compat = ag::cross_entropy(logits.type_compat, binary_target(*y.type_compat));
    sg.arg_compat = ag::cross_entropy(logits.arg_compat, binary_target(*y.coref));
  }
  sg.coref = ag::cross_entropy(logits.coref, binary_target(*y.coref));
}

}  // namespace detail

using EpochCallback = std::function<void(const EpochLog&)>;

// Joint-loss training. Each step runs every sample of the batch on its normal
// layout and, with trigger_mask, on the trigger-masked layout; each task loss
// is the mean over samples and views. Gradients are accumulated in sample
// order, so results do not depend on the worker count.
inline std::vector<EpochLog> train(Model& model, const std::vector<Document>& docs, std::vector<MentionPair> pairs,
                                   const TrainConfig& config, const EpochCallback& on_epoch = {}) {
  if (config.batch_size <= 0 || config.epochs <= 0 || !(config.learning_rate > 0.0)) {
    throw ConfigError("train: batch size, epochs and learning rate must be positive");
  }
  if (pairs.empty()) throw DataError("train: no training pairs");
  Rng rng(config.seed);
  if (config.shuffle_labels) {
    std::vector<bool> labels;
    for (const auto& p : pairs) labels.push_back(p.coref_label);
    rng.shuffle(labels);
    for (std::size_t i = 0; i < pairs.size(); ++i) pairs[i].coref_label = labels[i];
  }
  auto samples = prepare_samples(model, docs, pairs, config.trigger_mask);
  const auto params = model.parameters();
  Adam adam({config.learning_rate});
  const int views = config.trigger_mask ? 2 : 1;

  std::vector<std::size_t> order(samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<EpochLog> log;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    rng.shuffle(order);
    EpochLog entry;
    entry.epoch = epoch;
    int batches = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(config.batch_size));
      const std::size_t jobs = (end - begin) * static_cast<std::size_t>(views);
      std::vector<detail::SampleGraph> graphs(jobs);
      parallel_for(jobs, config.threads, [&](std::size_t j) {
        const TrainingSample& s = samples[order[begin + j / static_cast<std::size_t>(views)]];
        const PromptLayout& layout = (j % static_cast<std::size_t>(views) == 0) ? s.layout : s.masked;
        detail::build_sample_losses(graphs[j], model, layout, s.labels, config.type_loss && model.coref_prompt());
      });

      const double n = static_cast<double>(jobs);
      double ls = 0.0, lt = 0.0, la = 0.0, lc = 0.0;
      for (const auto& sg : graphs) {
        if (sg.type.valid()) ls += sg.type.scalar() / n;
        if (sg.type_compat.valid()) lt += sg.type_compat.scalar() / n;
        if (sg.arg_compat.valid()) la += sg.arg_compat.scalar() / n;
        lc += sg.coref.scalar() / n;
      }
      const double lm = lt + la;
      const double joint = joint_loss(ls, lm, lc);
      if (!std::isfinite(joint)) {
        std::ostringstream msg;
        msg << "non-finite loss at epoch " << epoch << ", batch " << batches << " (L_s=" << ls << ", L_m=" << lm
            << ", L_c=" << lc << "); first pair " << samples[order[begin]].pair.doc_id << ":"
            << samples[order[begin]].pair.first << "-" << samples[order[begin]].pair.second;
        throw TrainingError(msg.str());
      }
      const double ws = 1.0 / (1.0 + ls) / n;
      const double wm = 1.0 / (1.0 + lm) / n;
      const double wc = 1.0 / (1.0 + lc) / n;
      parallel_for(jobs, config.threads, [&](std::size_t j) {
        auto& sg = graphs[j];
        std::vector<std::pair<ag::Var, double>> seeds{{sg.coref, wc}};
        if (sg.type.valid()) seeds.emplace_back(sg.type, ws);
        if (sg.type_compat.valid()) seeds.emplace_back(sg.type_compat, wm);
        if (sg.arg_compat.valid()) seeds.emplace_back(sg.arg_compat, wm);
        sg.graph.backward(seeds);
      });
      Gradients grads;
      for (const auto& sg : graphs) add_gradients(grads, sg.graph.param_grads());
      clip_gradients(params, grads, config.grad_clip);
      adam.step(params, grads);

      entry.type += ls;
      entry.compat += lm;
      entry.coref += lc;
      entry.joint += joint;
      ++batches;
    }
    entry.type /= batches;
    entry.compat /= batches;
    entry.coref /= batches;
    entry.joint /= batches;
    entry.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    for (Parameter* p : params) {
      if (!p->value.allFinite()) throw TrainingError("parameter '" + p->name + "' became non-finite at epoch " +
                                                     std::to_string(epoch));
    }
    log.push_back(entry);
    if (on_epoch) on_epoch(entry);
  }
  return log;
}

// Plain masked-language-model pretraining over document sentences: 15% of
// positions (at least one) are replaced by [MASK] and predicted over the full
// vocabulary. Returns the mean loss of each epoch.
inline std::vector<double> pretrain_mlm(Model& model, const std::vector<Document>& docs, int epochs,
                                        double learning_rate, std::uint64_t seed, int threads = 1) {
  Rng rng(seed);
  const auto params = model.encoder.parameters();
  Adam adam({learning_rate});
  std::vector<int> all_ids(static_cast<std::size_t>(model.vocab.size()));
  for (std::size_t i = 0; i < all_ids.size(); ++i) all_ids[i] = static_cast<int>(i);
  std::vector<double> history;
  for (int e = 0; e < epochs; ++e) {
    double total = 0.0;
    int count = 0;
    for (const auto& doc : docs) {
      auto ids = tokenize(doc.tokens(), model.vocab);
      if (static_cast<int>(ids.size()) > model.encoder.config().max_positions) {
        ids.resize(static_cast<std::size_t>(model.encoder.config().max_positions));
      }
      std::vector<std::pair<int, int>> targets;  // position, original id
      for (std::size_t p = 0; p < ids.size(); ++p) {
        if (rng.bernoulli(0.15)) targets.emplace_back(static_cast<int>(p), ids[p]);
      }
      if (targets.empty()) {
        const auto p = rng.index(ids.size());
        targets.emplace_back(static_cast<int>(p), ids[p]);
      }
      for (const auto& [p, id] : targets) ids[static_cast<std::size_t>(p)] = model.vocab.mask();
      ag::Graph g;
      ag::Var hidden = encode(g, model.encoder, ids);
      std::vector<ag::Var> losses;
      for (const auto& [p, id] : targets) {
        losses.push_back(ag::cross_entropy(label_logits(g, model.encoder, ag::row(hidden, p), all_ids), id));
      }
      ag::Var loss = ag::weighted_sum(losses, 1.0 / static_cast<double>(losses.size()));
      g.backward(loss);
      Gradients grads = g.param_grads();
      clip_gradients(params, grads, 1.0);
      adam.step(params, grads);
      total += loss.scalar();
      ++count;
    }
    history.push_back(total / std::max(count, 1));
  }
  (void)threads;
  return history;
}

// ---------------------------------------------------------------------------
// Persistence: vocab.txt, verbalizers.tsv and model.ckpt in one directory.

inline void save_model(Model& model, const std::filesystem::path& dir, const nlohmann::json& extra = {}) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "vocab.txt");
    model.vocab.write(out);
  }
  {
    std::ofstream out(dir / "verbalizers.tsv");
    write_verbalizers(out, model.verbalizers, model.vocab);
  }
  nlohmann::json header = {{"format", "ecr-model"},
                           {"version", 1},
                           {"model", to_json(model.config)},
                           {"event_types", model.event_types},
                           {"vocab_size", model.vocab.size()}};
  if (!extra.is_null()) header["extra"] = extra;
  std::ofstream out(dir / "model.ckpt", std::ios::binary);
  const auto params = model.parameters();
  write_checkpoint(out, header, params);
}

inline Model load_model(const std::filesystem::path& dir) {
  std::ifstream vin(dir / "vocab.txt");
  if (!vin) throw InputError("cannot open " + (dir / "vocab.txt").string());
  Vocabulary vocab = Vocabulary::read(vin, (dir / "vocab.txt").string());
  std::ifstream cin(dir / "model.ckpt", std::ios::binary);
  if (!cin) throw InputError("cannot open " + (dir / "model.ckpt").string());
  const CheckpointData data = read_checkpoint(cin);
  const ModelConfig config = model_config_from_json(data.header.at("model"));
  const auto types = data.header.at("event_types").get<std::vector<std::string>>();

  EncoderState encoder(config.encoder, vocab.size());
  VerbalizerSet verbalizers;
  if (config.variant == TemplateVariant::CorefPrompt) {
    std::vector<std::string> type_tokens;
    for (const auto& t : types) type_tokens.push_back("<type:" + t + ">");
    verbalizers.type = lookup_verbalizer("type", types, type_tokens, vocab);
    verbalizers.compat = lookup_verbalizer("compat", {"compatible", "incompatible"},
                                           {"<compatible>", "<incompatible>"}, vocab);
    verbalizers.shared_compat = config.shared_compat;
    if (!config.shared_compat) {
      verbalizers.arg_compat = lookup_verbalizer("arg_compat", {"compatible", "incompatible"},
                                                 {"<arg-compatible>", "<arg-incompatible>"}, vocab);
    }
    verbalizers.coref = lookup_verbalizer("coref", {kCorefLabel, kNonCorefLabel}, {"same", "different"}, vocab);
    verbalizers.coref.descriptions = {{}, {}};
  } else if (config.variant == TemplateVariant::Connect) {
    verbalizers.coref = lookup_verbalizer("coref", {kCorefLabel, kNonCorefLabel}, {"<refer>", "<not-refer>"}, vocab);
  } else if (config.variant == TemplateVariant::Question) {
    verbalizers.coref = lookup_verbalizer("coref", {kCorefLabel, kNonCorefLabel}, {"yes", "no"}, vocab);
  } else {
    verbalizers.coref = lookup_verbalizer("coref", {kCorefLabel, kNonCorefLabel}, {"same", "different"}, vocab);
  }
  MatchingParams matching = init_matching(config.matching, config.encoder.hidden, config.encoder.seed + 1);
  Model model{config, std::move(vocab), std::move(encoder), std::move(matching), std::move(verbalizers), types};
  const auto params = model.parameters();
  restore_parameters(data, params);
  if (model.encoder.vocab_size() != model.vocab.size()) throw ParseError("checkpoint vocabulary size mismatch");
  return model;
}

}  // namespace ecr
