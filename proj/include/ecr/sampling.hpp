#pragma once

// Similarity encoder trained with Circle Loss, and undersampling of negative
// training pairs (Random, CorefENN-1, CorefENN-2, CorefNM).

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
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
#include "ecr/random.hpp"

namespace ecr {

enum class SamplingStrategy { None, Random, CorefENN1, CorefENN2, CorefNM };

// CorefENN-1 "easy" test: RelativeLabel asks whether the k neighbours all carry
// the same coref label with respect to the mention; NeighborAgreement asks
// whether the k neighbours are all mutually coreferential.
enum class Enn1Mode { RelativeLabel, NeighborAgreement };

inline const char* to_string(SamplingStrategy s) {
  switch (s) {
    case SamplingStrategy::None: return "none";
    case SamplingStrategy::Random: return "random";
    case SamplingStrategy::CorefENN1: return "enn1";
    case SamplingStrategy::CorefENN2: return "enn2";
    case SamplingStrategy::CorefNM: return "nm";
  }
  return "?";
}

inline SamplingStrategy parse_strategy(const std::string& name) {
  for (auto s : {SamplingStrategy::None, SamplingStrategy::Random, SamplingStrategy::CorefENN1,
                 SamplingStrategy::CorefENN2, SamplingStrategy::CorefNM}) {
    if (name == to_string(s)) return s;
  }
  throw ConfigError("unknown sampling strategy '" + name + "' (expected none|random|enn1|enn2|nm)");
}

inline const char* to_string(Enn1Mode m) {
  return m == Enn1Mode::RelativeLabel ? "relative-label" : "neighbor-agreement";
}

inline Enn1Mode parse_enn1_mode(const std::string& name) {
  if (name == "relative-label") return Enn1Mode::RelativeLabel;
  if (name == "neighbor-agreement") return Enn1Mode::NeighborAgreement;
  throw ConfigError("unknown CorefENN-1 mode '" + name + "'");
}

struct SamplingConfig {
  SamplingStrategy strategy = SamplingStrategy::CorefNM;
  int k = 3;
  double gamma = 0.2;
  double lambda = 32.0;
  Enn1Mode enn1_mode = Enn1Mode::RelativeLabel;
  std::uint64_t seed = 42;
  // similarity encoder training
  EncoderConfig encoder{32, 1, 4, 128, 512, 0.02, 7};
  int epochs = 3;
  double learning_rate = 1e-3;
  int threads = 1;
};

inline void validate(const SamplingConfig& c) {
  if (c.k < 1) throw ConfigError("sampling: k must be >= 1");
  if (c.gamma < -1.0 || c.gamma > 1.0) throw ConfigError("sampling: gamma must lie in [-1, 1]");
  if (!(c.lambda > 0.0)) throw ConfigError("sampling: lambda must be positive");
  if (c.epochs < 0 || !(c.learning_rate > 0.0)) throw ConfigError("sampling: bad encoder training settings");
}

inline nlohmann::json to_json(const SamplingConfig& c) {
  return {{"strategy", to_string(c.strategy)}, {"k", c.k}, {"gamma", c.gamma}, {"lambda", c.lambda},
          {"enn1_mode", to_string(c.enn1_mode)}, {"seed", c.seed}, {"encoder", to_json(c.encoder)},
          {"epochs", c.epochs}, {"learning_rate", c.learning_rate}};
}

inline SamplingConfig sampling_config_from_json(const nlohmann::json& j, SamplingConfig c = {}) {
  if (j.contains("strategy")) c.strategy = parse_strategy(j.at("strategy").get<std::string>());
  if (j.contains("enn1_mode")) c.enn1_mode = parse_enn1_mode(j.at("enn1_mode").get<std::string>());
  if (j.contains("encoder")) c.encoder = encoder_config_from_json(j.at("encoder"), c.encoder);
  c.k = j.value("k", c.k);
  c.gamma = j.value("gamma", c.gamma);
  c.lambda = j.value("lambda", c.lambda);
  c.seed = j.value("seed", c.seed);
  c.epochs = j.value("epochs", c.epochs);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  validate(c);
  return c;
}

// log(1 + sum over (pos, neg) of exp(lambda * (cos_neg - cos_pos))).
inline double circle_loss(std::span<const double> pos, std::span<const double> neg, double lambda) {
  if (!(lambda > 0.0)) throw ArgumentError("circle_loss: lambda must be positive");
  if (pos.empty() || neg.empty()) return 0.0;
  double mx = 0.0;
  for (double p : pos) {
    for (double n : neg) mx = std::max(mx, lambda * (n - p));
  }
  double total = std::exp(-mx);
  for (double p : pos) {
    for (double n : neg) total += std::exp(lambda * (n - p) - mx);
  }
  return mx + std::log(total);
}

// Graph version over 1 x n rows of cosines.
inline ag::Var circle_loss(ag::Var pos, ag::Var neg, double lambda) {
  if (!(lambda > 0.0)) throw ArgumentError("circle_loss: lambda must be positive");
  return ag::log1p_sum_exp(ag::scale(ag::outer_difference(ag::transpose(pos), neg), lambda));
}

struct DocumentSimilarity {
  std::vector<std::string> mention_ids;  // document order
  Matrix embeddings;                     // one row per mention
  Matrix cosine;                         // symmetric

  int index_of(const std::string& id) const {
    auto it = std::find(mention_ids.begin(), mention_ids.end(), id);
    if (it == mention_ids.end()) throw LookupError("similarity index lacks mention '" + id + "'");
    return static_cast<int>(it - mention_ids.begin());
  }

  double similarity(const std::string& a, const std::string& b) const { return cosine(index_of(a), index_of(b)); }
};

struct SimilarityIndex {
  std::map<std::string, DocumentSimilarity> documents;
  std::vector<double> epoch_losses;

  const DocumentSimilarity& document(const std::string& doc_id) const {
    auto it = documents.find(doc_id);
    if (it == documents.end()) throw LookupError("similarity index lacks document '" + doc_id + "'");
    return it->second;
  }

  // Builds an index entry straight from a cosine matrix (no embeddings).
  void set_document(const std::string& doc_id, std::vector<std::string> ids, Matrix cosine) {
    if (cosine.rows() != static_cast<Eigen::Index>(ids.size()) || cosine.cols() != cosine.rows()) {
      throw ShapeError("similarity matrix does not match the mention list");
    }
    documents[doc_id] = DocumentSimilarity{std::move(ids), Matrix(), std::move(cosine)};
  }
};

// Mean cosine over coreferential and non-coreferential mention pairs.
struct Separation {
  double positive = 0.0;
  double negative = 0.0;
  std::size_t positive_count = 0;
  std::size_t negative_count = 0;
};

inline Separation similarity_separation(const SimilarityIndex& index, const std::vector<Document>& docs) {
  Separation s;
  for (const auto& doc : docs) {
    auto it = index.documents.find(doc.doc_id);
    if (it == index.documents.end()) continue;
    for (const auto& p : enumerate_pairs(doc)) {
      const double c = it->second.similarity(p.first, p.second);
      if (p.coref_label) {
        s.positive += c;
        ++s.positive_count;
      } else {
        s.negative += c;
        ++s.negative_count;
      }
    }
  }
  if (s.positive_count) s.positive /= static_cast<double>(s.positive_count);
  if (s.negative_count) s.negative /= static_cast<double>(s.negative_count);
  return s;
}

namespace detail {

struct SimilarityModel {
  Vocabulary vocab;
  EncoderState encoder;
  MatchingParams pooling;  // only pool_weight is used

  std::vector<Parameter*> parameters() {
    auto out = encoder.parameters();
    out.push_back(&pooling.pool_weight);
    return out;
  }
};

struct DocumentBatch {
  const Document* doc = nullptr;
  std::vector<int> ids;
  std::vector<TokenSpan> spans;  // per mention in document order, clipped to ids
  std::vector<std::string> mention_ids;
  std::vector<std::pair<int, int>> positives, negatives;
};

inline DocumentBatch prepare_document(const Document& doc, const Vocabulary& vocab, int max_positions) {
  DocumentBatch b;
  b.doc = &doc;
  b.ids = tokenize(doc.tokens(), vocab);
  if (static_cast<int>(b.ids.size()) > max_positions) b.ids.resize(static_cast<std::size_t>(max_positions));
  const int last = static_cast<int>(b.ids.size()) - 1;
  std::unordered_map<std::string, std::size_t> chain_of = chain_index(doc);
  std::vector<std::size_t> chain;
  for (std::size_t idx : doc.document_order()) {
    const EventMention& m = doc.mentions[idx];
    TokenSpan s = m.trigger_span;
    // Triggers beyond the encoder window pool the last visible token.
    s.start = std::min(s.start, last);
    s.end = std::min(s.end, last);
    b.spans.push_back(s);
    b.mention_ids.push_back(m.mention_id);
    chain.push_back(chain_of.at(m.mention_id));
  }
  for (int i = 0; i < static_cast<int>(chain.size()); ++i) {
    for (int j = i + 1; j < static_cast<int>(chain.size()); ++j) {
      (chain[static_cast<std::size_t>(i)] == chain[static_cast<std::size_t>(j)] ? b.positives : b.negatives)
          .emplace_back(i, j);
    }
  }
  return b;
}

inline ag::Var mention_embeddings(ag::Graph& g, SimilarityModel& model, const DocumentBatch& b) {
  ag::Var hidden = encode(g, model.encoder, b.ids);
  std::vector<ag::Var> rows;
  rows.reserve(b.spans.size());
  for (const auto& s : b.spans) rows.push_back(pool_span(g, hidden, s.start, s.end, model.pooling));
  return ag::concat_rows(rows);
}

}  // namespace detail

// Trains a fresh document encoder so that coreferential mentions embed close
// together, then records cosine similarities for every mention pair.
inline SimilarityIndex train_similarity_encoder(const std::vector<Document>& docs, const SamplingConfig& config) {
  validate(config);
  EncoderConfig enc = config.encoder;
  enc.seed = config.seed ^ 0x5157ULL;
  Vocabulary vocab = build_vocab(docs);
  EncoderState encoder(enc, vocab.size());
  detail::SimilarityModel model{std::move(vocab), std::move(encoder), init_matching({4, 1, 1}, enc.hidden, enc.seed + 1)};
  const auto params = model.parameters();
  Adam adam({config.learning_rate});
  Rng rng(config.seed);

  std::vector<detail::DocumentBatch> batches;
  for (const auto& d : docs) batches.push_back(detail::prepare_document(d, model.vocab, enc.max_positions));

  SimilarityIndex index;
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < batches.size(); ++i) {
    if (!batches[i].positives.empty() && !batches[i].negatives.empty()) order.push_back(i);
  }
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    double total = 0.0;
    for (std::size_t i : order) {
      const auto& b = batches[i];
      ag::Graph g;
      ag::Var e = ag::normalize_rows(detail::mention_embeddings(g, model, b));
      ag::Var cos = ag::matmul_nt(e, e);
      ag::Var loss = circle_loss(ag::gather_entries(cos, b.positives), ag::gather_entries(cos, b.negatives),
                                 config.lambda);
      g.backward(loss);
      Gradients grads = g.param_grads();
      clip_gradients(params, grads, 1.0);
      adam.step(params, grads);
      total += loss.scalar();
    }
    index.epoch_losses.push_back(order.empty() ? 0.0 : total / static_cast<double>(order.size()));
  }

  std::vector<DocumentSimilarity> sims(batches.size());
  parallel_for(batches.size(), config.threads, [&](std::size_t i) {
    const auto& b = batches[i];
    DocumentSimilarity& s = sims[i];
    s.mention_ids = b.mention_ids;
    if (b.spans.empty()) return;
    ag::Graph g;
    s.embeddings = detail::mention_embeddings(g, model, b).value();
    Matrix unit = s.embeddings;
    for (Eigen::Index r = 0; r < unit.rows(); ++r) {
      const double n = unit.row(r).norm();
      if (n > 1e-8) unit.row(r) /= n;
    }
    s.cosine = unit * unit.transpose();
  });
  for (std::size_t i = 0; i < batches.size(); ++i) index.documents[batches[i].doc->doc_id] = std::move(sims[i]);
  return index;
}

namespace detail {

// Document-local view of a pair list: mention ids and a label per unordered pair.
struct PairTable {
  const DocumentSimilarity* sims = nullptr;
  std::map<std::pair<int, int>, bool> labels;

  std::optional<bool> label(int a, int b) const {
    auto it = labels.find({std::min(a, b), std::max(a, b)});
    if (it == labels.end()) return std::nullopt;
    return it->second;
  }

  // Other mentions of the document sorted by descending similarity to `a`,
  // ties broken by document order.
  std::vector<int> neighbours(int a) const {
    std::vector<int> out;
    const int n = static_cast<int>(sims->mention_ids.size());
    for (int b = 0; b < n; ++b) {
      if (b != a) out.push_back(b);
    }
    std::stable_sort(out.begin(), out.end(), [&](int x, int y) { return sims->cosine(a, x) > sims->cosine(a, y); });
    return out;
  }
};

inline std::map<std::string, PairTable> pair_tables(const std::vector<MentionPair>& pairs,
                                                    const SimilarityIndex& index) {
  std::map<std::string, PairTable> tables;
  for (const auto& p : pairs) {
    PairTable& t = tables[p.doc_id];
    if (!t.sims) t.sims = &index.document(p.doc_id);
    const int a = t.sims->index_of(p.first);
    const int b = t.sims->index_of(p.second);
    t.labels[{std::min(a, b), std::max(a, b)}] = p.coref_label;
  }
  return tables;
}

inline bool easy_mention(const PairTable& t, int a, int k, Enn1Mode mode) {
  const auto near = t.neighbours(a);
  if (static_cast<int>(near.size()) < k) return false;
  if (mode == Enn1Mode::RelativeLabel) {
    const auto first = t.label(a, near[0]);
    if (!first) return false;
    for (int i = 1; i < k; ++i) {
      if (t.label(a, near[static_cast<std::size_t>(i)]) != first) return false;
    }
    return true;
  }
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      if (t.label(near[static_cast<std::size_t>(i)], near[static_cast<std::size_t>(j)]) != std::optional<bool>(true)) {
        return false;
      }
    }
  }
  return true;
}

}  // namespace detail

// Keeps every positive pair; negatives are filtered per strategy. Output keeps
// the input order.
inline std::vector<MentionPair> apply_sampling(const std::vector<MentionPair>& pairs, const SimilarityIndex& index,
                                               const SamplingConfig& config) {
  validate(config);
  if (config.strategy == SamplingStrategy::None) return pairs;
  std::vector<bool> keep(pairs.size(), false);
  for (std::size_t i = 0; i < pairs.size(); ++i) keep[i] = pairs[i].coref_label;

  if (config.strategy == SamplingStrategy::Random) {
    std::vector<std::size_t> negatives;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      if (!pairs[i].coref_label) negatives.push_back(i);
    }
    const std::size_t positives = pairs.size() - negatives.size();
    Rng rng(config.seed);
    rng.shuffle(negatives);
    for (std::size_t i = 0; i < std::min(positives, negatives.size()); ++i) keep[negatives[i]] = true;
  } else {
    const auto tables = detail::pair_tables(pairs, index);
    // Per document: negatives to keep, as (min, max) mention indices.
    std::map<std::string, std::set<std::pair<int, int>>> selected;
    std::map<std::string, std::set<int>> easy;
    for (const auto& [doc_id, t] : tables) {
      const int n = static_cast<int>(t.sims->mention_ids.size());
      if (config.strategy == SamplingStrategy::CorefNM) {
        auto& sel = selected[doc_id];
        for (int a = 0; a < n; ++a) {
          int taken = 0;
          for (int b : t.neighbours(a)) {
            if (taken == config.k) break;
            if (t.label(a, b) == std::optional<bool>(false)) {
              sel.insert({std::min(a, b), std::max(a, b)});
              ++taken;
            }
          }
        }
      } else if (config.strategy == SamplingStrategy::CorefENN1) {
        auto& e = easy[doc_id];
        for (int a = 0; a < n; ++a) {
          if (detail::easy_mention(t, a, config.k, config.enn1_mode)) e.insert(a);
        }
      }
    }
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const auto& p = pairs[i];
      if (p.coref_label) continue;
      const auto& t = tables.at(p.doc_id);
      const int a = t.sims->index_of(p.first);
      const int b = t.sims->index_of(p.second);
      switch (config.strategy) {
        case SamplingStrategy::CorefENN2:
          keep[i] = t.sims->cosine(a, b) >= config.gamma;
          break;
        case SamplingStrategy::CorefNM:
          keep[i] = selected[p.doc_id].count({std::min(a, b), std::max(a, b)}) > 0;
          break;
        case SamplingStrategy::CorefENN1:
          keep[i] = !easy[p.doc_id].count(a) && !easy[p.doc_id].count(b);
          break;
        default:
          throw ConfigError("apply_sampling: unsupported strategy");
      }
    }
  }
  std::vector<MentionPair> out;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (keep[i]) out.push_back(pairs[i]);
  }
  return out;
}

struct SamplingReport {
  std::size_t coref = 0;
  std::size_t non_coref = 0;
  std::size_t all() const { return coref + non_coref; }
};

inline SamplingReport sampling_report(const std::vector<MentionPair>& pairs) {
  SamplingReport r;
  for (const auto& p : pairs) (p.coref_label ? r.coref : r.non_coref)++;
  return r;
}

inline nlohmann::json to_json(const SamplingReport& r) {
  return {{"Coref", r.coref}, {"Non-Coref", r.non_coref}, {"All", r.all()}};
}

}  // namespace ecr
