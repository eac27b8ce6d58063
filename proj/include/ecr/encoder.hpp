#pragma once

// Vocabulary and a small bidirectional transformer encoder with a masked
// language model head tied to the token embedding table.

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "ecr/autograd.hpp"
#include "ecr/corpus.hpp"
#include "ecr/errors.hpp"
#include "ecr/random.hpp"

namespace ecr {

enum class TokenKind { Special, Word, Virtual };

inline const char* to_string(TokenKind k) {
  switch (k) {
    case TokenKind::Special: return "special";
    case TokenKind::Word: return "word";
    case TokenKind::Virtual: return "virtual";
  }
  return "?";
}

class Vocabulary {
 public:
  static constexpr std::array<std::string_view, 13> kSpecials = {
      "[PAD]", "[UNK]", "[MASK]", "[E1S]", "[E1E]", "[E2S]", "[E2E]",
      "[L1]",  "[L2]",  "[L3]",   "[L4]",  "[L5]",  "[L6]"};

  Vocabulary() {
    for (auto s : kSpecials) insert(std::string(s), TokenKind::Special, {});
  }

  int pad() const { return 0; }
  int unk() const { return 1; }
  int mask() const { return 2; }
  int e1s() const { return 3; }
  int e1e() const { return 4; }
  int e2s() const { return 5; }
  int e2e() const { return 6; }
  // Learnable soft-prompt tokens [L1]..[L6]; index is 1-based.
  int learnable(int index) const {
    if (index < 1 || index > 6) throw ArgumentError("learnable token index must be in 1..6");
    return 6 + index;
  }

  int size() const { return static_cast<int>(tokens_.size()); }

  // Adds a text word if absent; returns its id.
  int add_word(const std::string& word) {
    if (word.empty()) throw ArgumentError("cannot add an empty word");
    if (auto it = ids_.find(word); it != ids_.end()) {
      if (kinds_[it->second] != TokenKind::Word) {
        throw RegistrationError("'" + word + "' is reserved for a non-word token");
      }
      return it->second;
    }
    return insert(word, TokenKind::Word, {});
  }

  int add_virtual(const std::string& name, std::vector<int> description) {
    if (ids_.contains(name)) throw RegistrationError("virtual token '" + name + "' already registered");
    return insert(name, TokenKind::Virtual, std::move(description));
  }

  std::optional<int> find(const std::string& token) const {
    if (auto it = ids_.find(token); it != ids_.end()) return it->second;
    return std::nullopt;
  }

  // Id of a text word; specials and virtual tokens are never produced from text.
  int word_id(const std::string& token) const {
    auto it = ids_.find(token);
    if (it == ids_.end() || kinds_[it->second] != TokenKind::Word) return unk();
    return it->second;
  }

  // Id of a text word, throwing if the word is not in the vocabulary.
  int require_word(const std::string& token) const {
    const int id = word_id(token);
    if (id == unk()) throw LookupError("word '" + token + "' not in vocabulary");
    return id;
  }

  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  TokenKind kind(int id) const { return kinds_.at(static_cast<std::size_t>(id)); }
  const std::vector<int>& description(int id) const { return descriptions_.at(static_cast<std::size_t>(id)); }

  std::vector<int> virtual_ids() const {
    std::vector<int> out;
    for (int i = 0; i < size(); ++i) {
      if (kinds_[static_cast<std::size_t>(i)] == TokenKind::Virtual) out.push_back(i);
    }
    return out;
  }

  void write(std::ostream& out) const {
    for (int i = 0; i < size(); ++i) {
      out << i << '\t' << token(i) << '\t' << to_string(kind(i));
      const auto& desc = description(i);
      if (!desc.empty()) {
        out << '\t';
        for (std::size_t k = 0; k < desc.size(); ++k) out << (k ? "," : "") << desc[k];
      }
      out << '\n';
    }
  }

  static Vocabulary read(std::istream& in, const std::string& source = "<stream>") {
    Vocabulary v;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      std::vector<std::string> fields;
      std::stringstream ss(line);
      std::string f;
      while (std::getline(ss, f, '\t')) fields.push_back(f);
      if (fields.size() < 3) throw ParseError(source + ":" + std::to_string(line_no) + ": expected id, token, kind");
      const int id = std::stoi(fields[0]);
      if (fields[2] == "special") {
        if (id >= static_cast<int>(kSpecials.size()) || v.token(id) != fields[1]) {
          throw ParseError(source + ":" + std::to_string(line_no) + ": special token mismatch");
        }
        continue;
      }
      if (id != v.size()) throw ParseError(source + ":" + std::to_string(line_no) + ": ids must be dense");
      if (fields[2] == "word") {
        v.add_word(fields[1]);
      } else if (fields[2] == "virtual") {
        std::vector<int> desc;
        if (fields.size() > 3) {
          std::stringstream ds(fields[3]);
          std::string d;
          while (std::getline(ds, d, ',')) desc.push_back(std::stoi(d));
        }
        v.add_virtual(fields[1], std::move(desc));
      } else {
        throw ParseError(source + ":" + std::to_string(line_no) + ": unknown token kind '" + fields[2] + "'");
      }
    }
    return v;
  }

 private:
  int insert(const std::string& token, TokenKind kind, std::vector<int> description) {
    const int id = size();
    ids_.emplace(token, id);
    tokens_.push_back(token);
    kinds_.push_back(kind);
    descriptions_.push_back(std::move(description));
    return id;
  }

  std::unordered_map<std::string, int> ids_;
  std::vector<std::string> tokens_;
  std::vector<TokenKind> kinds_;
  std::vector<std::vector<int>> descriptions_;
};

// Words with corpus frequency >= min_count, added in lexicographic order.
inline Vocabulary build_vocab(const std::vector<Document>& corpus, int min_count = 1) {
  if (corpus.empty()) throw ConfigError("build_vocab: empty corpus");
  std::map<std::string, int> counts;
  for (const auto& doc : corpus) {
    for (const auto& s : doc.sentences) {
      for (const auto& t : s) ++counts[t];
    }
  }
  Vocabulary v;
  for (const auto& [token, count] : counts) {
    if (count >= min_count && !v.find(token)) v.add_word(token);
  }
  return v;
}

inline std::vector<int> tokenize(std::span<const std::string> text, const Vocabulary& vocab) {
  std::vector<int> ids;
  ids.reserve(text.size());
  for (const auto& t : text) ids.push_back(vocab.word_id(t));
  return ids;
}

// ---------------------------------------------------------------------------

struct EncoderConfig {
  int hidden = 64;
  int layers = 2;
  int heads = 4;
  int feed_forward = 256;
  int max_positions = 512;
  double init_std = 0.02;
  std::uint64_t seed = 42;
};

inline nlohmann::json to_json(const EncoderConfig& c) {
  return {{"hidden", c.hidden},       {"layers", c.layers},       {"heads", c.heads},
          {"feed_forward", c.feed_forward}, {"max_positions", c.max_positions},
          {"init_std", c.init_std},   {"seed", c.seed}};
}

inline EncoderConfig encoder_config_from_json(const nlohmann::json& j, EncoderConfig c = {}) {
  c.hidden = j.value("hidden", c.hidden);
  c.layers = j.value("layers", c.layers);
  c.heads = j.value("heads", c.heads);
  c.feed_forward = j.value("feed_forward", c.feed_forward);
  c.max_positions = j.value("max_positions", c.max_positions);
  c.init_std = j.value("init_std", c.init_std);
  c.seed = j.value("seed", c.seed);
  return c;
}

struct EncoderLayer {
  Parameter qkv_weight, qkv_bias;
  Parameter out_weight, out_bias;
  Parameter attn_norm_gain, attn_norm_bias;
  Parameter ff_in_weight, ff_in_bias;
  Parameter ff_out_weight, ff_out_bias;
  Parameter ff_norm_gain, ff_norm_bias;
};

// Pre-norm transformer encoder. The MLM head is the transposed token
// embedding table plus a per-token bias, so adding a token row extends the
// head output by one.
class EncoderState {
 public:
  EncoderState(const EncoderConfig& config, int vocab_size) : config_(config) {
    if (config.hidden <= 0 || config.layers < 0 || config.heads <= 0 || config.hidden % config.heads != 0 ||
        config.feed_forward <= 0 || config.max_positions <= 0 || vocab_size <= 0) {
      throw ConfigError("encoder: invalid configuration");
    }
    Rng rng(config.seed);
    const int h = config.hidden;
    const auto random = [&](int rows, int cols) {
      Matrix m(rows, cols);
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal() * config.init_std;
      return m;
    };
    token_embedding_ = {"token_embedding", random(vocab_size, h)};
    position_embedding_ = {"position_embedding", random(config.max_positions, h)};
    layers_.resize(static_cast<std::size_t>(config.layers));
    for (int l = 0; l < config.layers; ++l) {
      auto& L = layers_[static_cast<std::size_t>(l)];
      const std::string p = "layer" + std::to_string(l) + ".";
      L.qkv_weight = {p + "qkv_weight", random(h, 3 * h)};
      L.qkv_bias = {p + "qkv_bias", Matrix::Zero(1, 3 * h)};
      L.out_weight = {p + "out_weight", random(h, h)};
      L.out_bias = {p + "out_bias", Matrix::Zero(1, h)};
      L.attn_norm_gain = {p + "attn_norm_gain", Matrix::Ones(1, h)};
      L.attn_norm_bias = {p + "attn_norm_bias", Matrix::Zero(1, h)};
      L.ff_in_weight = {p + "ff_in_weight", random(h, config.feed_forward)};
      L.ff_in_bias = {p + "ff_in_bias", Matrix::Zero(1, config.feed_forward)};
      L.ff_out_weight = {p + "ff_out_weight", random(config.feed_forward, h)};
      L.ff_out_bias = {p + "ff_out_bias", Matrix::Zero(1, h)};
      L.ff_norm_gain = {p + "ff_norm_gain", Matrix::Ones(1, h)};
      L.ff_norm_bias = {p + "ff_norm_bias", Matrix::Zero(1, h)};
    }
    final_norm_gain_ = {"final_norm_gain", Matrix::Ones(1, h)};
    final_norm_bias_ = {"final_norm_bias", Matrix::Zero(1, h)};
    head_bias_ = {"head_bias", Matrix::Zero(vocab_size, 1)};
    init_rng_state_ = rng.next();
  }

  EncoderState(const EncoderState&) = default;
  EncoderState& operator=(const EncoderState&) = default;

  const EncoderConfig& config() const { return config_; }
  int hidden() const { return config_.hidden; }
  int vocab_size() const { return static_cast<int>(token_embedding_.value.rows()); }

  Parameter& token_embedding() { return token_embedding_; }
  const Parameter& token_embedding() const { return token_embedding_; }
  Parameter& position_embedding() { return position_embedding_; }
  Parameter& head_bias() { return head_bias_; }
  const Parameter& head_bias() const { return head_bias_; }
  std::vector<EncoderLayer>& layers() { return layers_; }
  Parameter& final_norm_gain() { return final_norm_gain_; }
  Parameter& final_norm_bias() { return final_norm_bias_; }

  // Appends one token row (and a zero head bias); returns the new id.
  int append_token(const Eigen::RowVectorXd& embedding) {
    if (embedding.size() != hidden()) throw ShapeError("append_token: embedding has wrong width");
    const auto v = token_embedding_.value.rows();
    token_embedding_.value.conservativeResize(v + 1, Eigen::NoChange);
    token_embedding_.value.row(v) = embedding;
    head_bias_.value.conservativeResize(v + 1, Eigen::NoChange);
    head_bias_.value(v, 0) = 0.0;
    return static_cast<int>(v);
  }

  // Grows the table with randomly initialised rows up to vocab_size.
  void grow_to(int vocab_size) {
    Rng rng(init_rng_state_ + static_cast<std::uint64_t>(this->vocab_size()));
    while (this->vocab_size() < vocab_size) {
      Eigen::RowVectorXd row(hidden());
      for (int i = 0; i < hidden(); ++i) row(i) = rng.normal() * config_.init_std;
      append_token(row);
    }
  }

  std::vector<Parameter*> parameters() {
    std::vector<Parameter*> out{&token_embedding_, &position_embedding_};
    for (auto& L : layers_) {
      for (Parameter* p : {&L.qkv_weight, &L.qkv_bias, &L.out_weight, &L.out_bias, &L.attn_norm_gain,
                           &L.attn_norm_bias, &L.ff_in_weight, &L.ff_in_bias, &L.ff_out_weight, &L.ff_out_bias,
                           &L.ff_norm_gain, &L.ff_norm_bias}) {
        out.push_back(p);
      }
    }
    out.push_back(&final_norm_gain_);
    out.push_back(&final_norm_bias_);
    out.push_back(&head_bias_);
    return out;
  }

 private:
  EncoderConfig config_;
  Parameter token_embedding_;
  Parameter position_embedding_;
  std::vector<EncoderLayer> layers_;
  Parameter final_norm_gain_;
  Parameter final_norm_bias_;
  Parameter head_bias_;
  std::uint64_t init_rng_state_ = 0;
};

// Registers a virtual label word whose embedding is the mean of its
// description tokens' embeddings.
inline int add_virtual_token(Vocabulary& vocab, const std::string& name, const std::vector<int>& description,
                             EncoderState& state) {
  if (description.empty()) throw ArgumentError("virtual token '" + name + "' needs a non-empty description");
  if (state.vocab_size() != vocab.size()) {
    throw ShapeError("vocabulary and embedding table sizes differ");
  }
  Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(state.hidden());
  for (int id : description) {
    if (id < 0 || id >= vocab.size()) throw ArgumentError("description id " + std::to_string(id) + " not in vocabulary");
    mean += state.token_embedding().value.row(id);
  }
  mean /= static_cast<double>(description.size());
  const int id = vocab.add_virtual(name, description);
  state.append_token(mean);
  return id;
}

// Hidden states (n x hidden) for a token sequence.
inline ag::Var encode(ag::Graph& g, EncoderState& state, std::span<const int> ids) {
  const auto& cfg = state.config();
  if (ids.empty()) throw ArgumentError("encode: empty input");
  if (static_cast<int>(ids.size()) > cfg.max_positions) {
    throw LengthError("encode: input length " + std::to_string(ids.size()) + " exceeds " +
                      std::to_string(cfg.max_positions) + " positions");
  }
  const auto n = static_cast<Eigen::Index>(ids.size());
  std::vector<int> positions(ids.size());
  for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = static_cast<int>(i);

  ag::Var x = ag::add(g.gather_rows(state.token_embedding(), ids), g.gather_rows(state.position_embedding(), positions));
  for (auto& L : state.layers()) {
    ag::Var a = ag::layer_norm(x, g.param(L.attn_norm_gain), g.param(L.attn_norm_bias));
    ag::Var qkv = ag::add_row(ag::matmul(a, g.param(L.qkv_weight)), g.param(L.qkv_bias));
    ag::Var merged = ag::multi_head_attention(qkv, cfg.heads);
    x = ag::add(x, ag::add_row(ag::matmul(merged, g.param(L.out_weight)), g.param(L.out_bias)));
    ag::Var b = ag::layer_norm(x, g.param(L.ff_norm_gain), g.param(L.ff_norm_bias));
    ag::Var f = ag::gelu(ag::add_row(ag::matmul(b, g.param(L.ff_in_weight)), g.param(L.ff_in_bias)));
    x = ag::add(x, ag::add_row(ag::matmul(f, g.param(L.ff_out_weight)), g.param(L.ff_out_bias)));
  }
  x = ag::layer_norm(x, g.param(state.final_norm_gain()), g.param(state.final_norm_bias()));
  if (x.rows() != n) throw ShapeError("encode: row count mismatch");
  return x;
}

inline Matrix encode_values(EncoderState& state, std::span<const int> ids) {
  ag::Graph g;
  return encode(g, state, ids).value();
}

// MLM head logits restricted to the given token ids: a 1 x k row.
inline ag::Var label_logits(ag::Graph& g, EncoderState& state, ag::Var hidden_row, std::span<const int> ids) {
  if (hidden_row.rows() != 1 || hidden_row.cols() != state.hidden()) throw ShapeError("label_logits: bad hidden row");
  ag::Var rows = g.gather_rows(state.token_embedding(), ids);
  ag::Var bias = g.gather_rows(state.head_bias(), ids);
  return ag::add(ag::matmul_nt(hidden_row, rows), ag::transpose(bias));
}

// Full-vocabulary MLM logits for one hidden row.
inline Eigen::RowVectorXd mlm_logits(const EncoderState& state, const Eigen::RowVectorXd& hidden_row) {
  if (hidden_row.size() != state.hidden()) {
    throw ShapeError("mlm_logits: hidden row has dimension " + std::to_string(hidden_row.size()) + ", expected " +
                     std::to_string(state.hidden()));
  }
  Eigen::RowVectorXd logits = hidden_row * state.token_embedding().value.transpose();
  logits += state.head_bias().value.col(0).transpose();
  return logits;
}

// ---------------------------------------------------------------------------
// Checkpoints: magic, JSON header, then named tensors as raw doubles.

inline constexpr std::string_view kCheckpointMagic = "ECRCKPT1";

inline void write_checkpoint(std::ostream& out, const nlohmann::json& header, std::span<Parameter* const> params) {
  const auto write_u64 = [&out](std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); };
  out.write(kCheckpointMagic.data(), static_cast<std::streamsize>(kCheckpointMagic.size()));
  const std::string text = header.dump();
  write_u64(text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  write_u64(params.size());
  for (const Parameter* p : params) {
    write_u64(p->name.size());
    out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    write_u64(static_cast<std::uint64_t>(p->value.rows()));
    write_u64(static_cast<std::uint64_t>(p->value.cols()));
    out.write(reinterpret_cast<const char*>(p->value.data()),
              static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(p->value.size())));
  }
  if (!out) throw InputError("checkpoint write failed");
}

struct CheckpointData {
  nlohmann::json header;
  std::map<std::string, Matrix> tensors;
};

inline CheckpointData read_checkpoint(std::istream& in) {
  const auto read_u64 = [&in]() {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw ParseError("checkpoint truncated");
    return v;
  };
  std::string magic(kCheckpointMagic.size(), '\0');
  in.read(magic.data(), static_cast<std::streamsize>(magic.size()));
  if (!in || magic != kCheckpointMagic) throw ParseError("not a checkpoint (bad magic)");
  CheckpointData data;
  std::string text(read_u64(), '\0');
  in.read(text.data(), static_cast<std::streamsize>(text.size()));
  data.header = nlohmann::json::parse(text);
  const auto count = read_u64();
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string name(read_u64(), '\0');
    in.read(name.data(), static_cast<std::streamsize>(name.size()));
    const auto rows = static_cast<Eigen::Index>(read_u64());
    const auto cols = static_cast<Eigen::Index>(read_u64());
    Matrix m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(m.size())));
    if (!in) throw ParseError("checkpoint truncated in tensor '" + name + "'");
    data.tensors.emplace(std::move(name), std::move(m));
  }
  return data;
}

inline void restore_parameters(const CheckpointData& data, std::span<Parameter* const> params) {
  for (Parameter* p : params) {
    auto it = data.tensors.find(p->name);
    if (it == data.tensors.end()) throw ParseError("checkpoint lacks tensor '" + p->name + "'");
    p->value = it->second;
  }
}

}  // namespace ecr
