#pragma once

// Annotated documents, corpus ingestion, synthetic corpus generation and
// labelled mention-pair enumeration.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "ecr/errors.hpp"
#include "ecr/random.hpp"

namespace ecr {

enum class ArgumentRole { Participant, Location };

struct ArgumentMention {
  std::string text;
  ArgumentRole role = ArgumentRole::Participant;
};

struct TokenSpan {
  int start = 0;
  int end = 0;  // inclusive
  int length() const { return end - start + 1; }
  friend bool operator==(const TokenSpan&, const TokenSpan&) = default;
};

struct EventMention {
  std::string mention_id;
  TokenSpan trigger_span;
  std::string event_type;
  std::vector<ArgumentMention> participants;
  std::vector<ArgumentMention> locations;

  bool has_arguments() const { return !participants.empty() || !locations.empty(); }
};

using Chain = std::vector<std::string>;

struct Document {
  std::string doc_id;
  std::vector<std::vector<std::string>> sentences;
  std::vector<EventMention> mentions;
  std::vector<Chain> chains;

  // Sentences flattened into one token sequence; trigger spans index into it.
  std::vector<std::string> tokens() const {
    std::vector<std::string> out;
    for (const auto& s : sentences) out.insert(out.end(), s.begin(), s.end());
    return out;
  }

  std::size_t token_count() const {
    std::size_t n = 0;
    for (const auto& s : sentences) n += s.size();
    return n;
  }

  const EventMention& mention(const std::string& id) const {
    for (const auto& m : mentions) {
      if (m.mention_id == id) return m;
    }
    throw LookupError("document " + doc_id + " has no mention '" + id + "'");
  }

  std::size_t mention_index(const std::string& id) const {
    for (std::size_t i = 0; i < mentions.size(); ++i) {
      if (mentions[i].mention_id == id) return i;
    }
    throw LookupError("document " + doc_id + " has no mention '" + id + "'");
  }

  // Mention indices sorted by trigger position (start, end, then declaration order).
  std::vector<std::size_t> document_order() const {
    std::vector<std::size_t> order(mentions.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [this](std::size_t a, std::size_t b) {
      const auto& sa = mentions[a].trigger_span;
      const auto& sb = mentions[b].trigger_span;
      return sa.start != sb.start ? sa.start < sb.start : sa.end < sb.end;
    });
    return order;
  }
};

enum class ArgState { NoA, OneA, BothA };

inline const char* to_string(ArgState s) {
  switch (s) {
    case ArgState::NoA: return "NoA";
    case ArgState::OneA: return "OneA";
    case ArgState::BothA: return "BothA";
  }
  return "?";
}

inline std::optional<ArgState> parse_arg_state(const std::string& s) {
  if (s == "NoA") return ArgState::NoA;
  if (s == "OneA") return ArgState::OneA;
  if (s == "BothA") return ArgState::BothA;
  return std::nullopt;
}

struct MentionPair {
  std::string doc_id;
  std::string first;
  std::string second;
  bool coref_label = false;
  bool type_compat_label = false;
  ArgState arg_state = ArgState::NoA;
};

// Throws ValidationError naming the document on any broken invariant.
inline void validate_document(const Document& doc, const std::set<std::string>& type_inventory = {}) {
  const auto fail = [&doc](const std::string& what) {
    throw ValidationError("document '" + doc.doc_id + "': " + what);
  };
  if (doc.doc_id.empty()) throw ValidationError("document with empty doc_id");
  const auto n_tokens = static_cast<int>(doc.token_count());
  std::unordered_set<std::string> ids;
  for (const auto& m : doc.mentions) {
    if (m.mention_id.empty()) fail("mention with empty id");
    if (!ids.insert(m.mention_id).second) fail("duplicate mention id '" + m.mention_id + "'");
    if (m.trigger_span.start > m.trigger_span.end) fail("mention '" + m.mention_id + "' has start > end");
    if (m.trigger_span.start < 0 || m.trigger_span.end >= n_tokens) {
      fail("mention '" + m.mention_id + "' trigger span outside token range");
    }
    if (m.event_type.empty()) fail("mention '" + m.mention_id + "' has empty event type");
    if (!type_inventory.empty() && !type_inventory.contains(m.event_type)) {
      fail("mention '" + m.mention_id + "' has undeclared event type '" + m.event_type + "'");
    }
    for (const auto* args : {&m.participants, &m.locations}) {
      for (const auto& a : *args) {
        if (a.text.empty()) fail("mention '" + m.mention_id + "' has an empty argument");
      }
    }
  }
  std::unordered_set<std::string> covered;
  for (const auto& chain : doc.chains) {
    if (chain.empty()) fail("empty chain");
    for (const auto& id : chain) {
      if (!ids.contains(id)) fail("chain references unknown mention '" + id + "'");
      if (!covered.insert(id).second) fail("mention '" + id + "' appears in more than one chain");
    }
  }
  if (covered.size() != ids.size()) fail("chains do not cover every mention");
}

// ---------------------------------------------------------------------------
// Line-delimited JSON corpus format.

inline nlohmann::json to_json(const Document& doc) {
  nlohmann::json j;
  j["doc_id"] = doc.doc_id;
  j["tokens"] = doc.sentences;
  nlohmann::json mentions = nlohmann::json::array();
  for (const auto& m : doc.mentions) {
    nlohmann::json jm;
    jm["id"] = m.mention_id;
    jm["span"] = {m.trigger_span.start, m.trigger_span.end};
    jm["type"] = m.event_type;
    jm["participants"] = nlohmann::json::array();
    for (const auto& a : m.participants) jm["participants"].push_back(a.text);
    jm["locations"] = nlohmann::json::array();
    for (const auto& a : m.locations) jm["locations"].push_back(a.text);
    mentions.push_back(std::move(jm));
  }
  j["mentions"] = std::move(mentions);
  j["chains"] = doc.chains;
  return j;
}

inline Document document_from_json(const nlohmann::json& j) {
  Document doc;
  doc.doc_id = j.at("doc_id").get<std::string>();
  doc.sentences = j.at("tokens").get<std::vector<std::vector<std::string>>>();
  for (const auto& jm : j.at("mentions")) {
    EventMention m;
    m.mention_id = jm.at("id").get<std::string>();
    const auto span = jm.at("span").get<std::vector<int>>();
    if (span.size() != 2) throw ParseError("span must have two offsets");
    m.trigger_span = {span[0], span[1]};
    m.event_type = jm.at("type").get<std::string>();
    if (jm.contains("participants")) {
      for (const auto& t : jm.at("participants")) m.participants.push_back({t.get<std::string>(), ArgumentRole::Participant});
    }
    if (jm.contains("locations")) {
      for (const auto& t : jm.at("locations")) m.locations.push_back({t.get<std::string>(), ArgumentRole::Location});
    }
    doc.mentions.push_back(std::move(m));
  }
  doc.chains = j.at("chains").get<std::vector<Chain>>();
  return doc;
}

inline std::vector<Document> read_corpus(std::istream& in, const std::string& source = "<stream>",
                                         const std::set<std::string>& type_inventory = {}) {
  std::vector<Document> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;  // blank or comment
    Document doc;
    try {
      doc = document_from_json(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(source + ":" + std::to_string(line_no) + ": malformed document record: " + e.what());
    } catch (const ParseError& e) {
      throw ParseError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
    validate_document(doc, type_inventory);
    docs.push_back(std::move(doc));
  }
  return docs;
}

inline std::vector<Document> load_corpus(const std::string& path, const std::set<std::string>& type_inventory = {}) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open corpus file '" + path + "'");
  return read_corpus(in, path, type_inventory);
}

inline void write_corpus(std::ostream& out, const std::vector<Document>& docs, const std::string& comment = "") {
  if (!comment.empty()) out << "# " << comment << '\n';
  for (const auto& d : docs) out << to_json(d).dump() << '\n';
}

inline void save_corpus(const std::string& path, const std::vector<Document>& docs, const std::string& comment = "") {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write corpus file '" + path + "'");
  write_corpus(out, docs, comment);
}

// ---------------------------------------------------------------------------
// Pairs.

inline ArgState argument_state(const EventMention& a, const EventMention& b) {
  const int with_args = static_cast<int>(a.has_arguments()) + static_cast<int>(b.has_arguments());
  return with_args == 0 ? ArgState::NoA : with_args == 1 ? ArgState::OneA : ArgState::BothA;
}

inline ArgState argument_state(const MentionPair& pair, const Document& doc) {
  return argument_state(doc.mention(pair.first), doc.mention(pair.second));
}

// mention id -> chain index
inline std::unordered_map<std::string, std::size_t> chain_index(const Document& doc) {
  std::unordered_map<std::string, std::size_t> out;
  for (std::size_t c = 0; c < doc.chains.size(); ++c) {
    for (const auto& id : doc.chains[c]) out[id] = c;
  }
  return out;
}

inline std::vector<MentionPair> enumerate_pairs(const Document& doc) {
  const auto order = doc.document_order();
  const auto chain_of = chain_index(doc);
  std::vector<MentionPair> pairs;
  pairs.reserve(order.size() * (order.size() - (order.empty() ? 0 : 1)) / 2);
  for (std::size_t i = 0; i < order.size(); ++i) {
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      const auto& a = doc.mentions[order[i]];
      const auto& b = doc.mentions[order[j]];
      MentionPair p;
      p.doc_id = doc.doc_id;
      p.first = a.mention_id;
      p.second = b.mention_id;
      p.coref_label = chain_of.at(a.mention_id) == chain_of.at(b.mention_id);
      p.type_compat_label = a.event_type == b.event_type;
      p.arg_state = argument_state(a, b);
      pairs.push_back(std::move(p));
    }
  }
  return pairs;
}

inline std::vector<MentionPair> enumerate_pairs(const std::vector<Document>& docs) {
  std::vector<MentionPair> out;
  for (const auto& d : docs) {
    auto p = enumerate_pairs(d);
    out.insert(out.end(), std::make_move_iterator(p.begin()), std::make_move_iterator(p.end()));
  }
  return out;
}

inline std::set<std::string> event_types(const std::vector<Document>& docs) {
  std::set<std::string> types;
  for (const auto& d : docs) {
    for (const auto& m : d.mentions) types.insert(m.event_type);
  }
  return types;
}

// ---------------------------------------------------------------------------
// Synthetic corpus generation.

struct Scenario {
  std::string event_type;
  std::vector<std::string> triggers;
  std::vector<std::string> participants;
  std::vector<std::string> locations;
};

struct SyntheticConfig {
  int num_docs = 200;
  int mentions_per_doc = 5;
  int mention_jitter = 1;        // per-document count drawn uniformly from mean +- jitter
  double singleton_rate = 0.3;   // probability a new event instance is mentioned once
  int max_chain = 4;
  double argument_rate = 0.8;    // probability a mention carries annotated arguments
  int max_filler_sentences = 1;  // filler sentences inserted after each mention sentence
  std::vector<Scenario> scenarios;
  std::vector<std::string> filler_words;
};

inline std::vector<Scenario> default_scenarios() {
  return {
      {"Conflict.Attack", {"attack", "assault", "bombing", "strike"},
       {"rebels", "soldiers", "militants", "police", "insurgents", "gunmen"},
       {"Baghdad", "Kabul", "Aleppo", "Mosul", "Gaza", "Homs"}},
      {"Life.Die", {"death", "killing", "died", "passed"},
       {"the mayor", "a teacher", "two civilians", "the singer", "her", "a soldier"},
       {"Rome", "Madrid", "the hospital", "Lagos", "Cairo", "the village"}},
      {"Justice.Arrest-Jail", {"arrest", "detention", "custody", "detained"},
       {"the suspect", "activists", "the banker", "a journalist", "smugglers", "him"},
       {"Paris", "Moscow", "the airport", "Istanbul", "the border", "Berlin"}},
      {"Movement.Transport", {"travel", "trip", "journey", "visit"},
       {"the president", "refugees", "the minister", "tourists", "the delegation", "pilgrims"},
       {"London", "Tokyo", "Beijing", "Ottawa", "Nairobi", "Lima"}},
      {"Contact.Meet", {"meeting", "talks", "summit", "conference"},
       {"leaders", "diplomats", "the ministers", "negotiators", "the envoys", "officials"},
       {"Geneva", "Vienna", "Doha", "Oslo", "Brussels", "Helsinki"}},
      {"Transaction.Transfer-Money", {"payment", "donation", "funding", "loan"},
       {"the bank", "donors", "the charity", "investors", "the government", "the fund"},
       {"Zurich", "Dubai", "Singapore", "Frankfurt", "New York", "Hong Kong"}},
      {"Personnel.Elect", {"election", "vote", "ballot", "poll"},
       {"voters", "the party", "candidates", "the council", "citizens", "lawmakers"},
       {"Ohio", "Bavaria", "Quebec", "Kerala", "Texas", "Sicily"}},
      {"Life.Injure", {"injury", "wounded", "injured", "hurt"},
       {"workers", "a child", "passengers", "the driver", "fans", "miners"},
       {"the stadium", "the factory", "the mine", "the highway", "the market", "the port"}},
  };
}

inline std::vector<std::string> default_filler_words() {
  return {"officials", "said", "on",      "monday",  "according", "to",      "local",   "media",
          "the",       "news", "spread",  "quickly", "witnesses", "later",   "reported", "that",
          "it",        "was",  "widely",  "covered", "by",        "sources", "earlier", "this",
          "week",      "many", "people",  "were",    "watching",  "closely", "while",   "others",
          "remained",  "calm", "analysts", "expect", "further",   "details", "soon",    "today"};
}

inline SyntheticConfig default_synthetic_config() {
  SyntheticConfig c;
  c.scenarios = default_scenarios();
  c.filler_words = default_filler_words();
  return c;
}

namespace detail {

inline std::vector<std::string> split_words(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> out;
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

struct EventInstance {
  const Scenario* scenario;
  std::vector<std::string> participants;
  std::string location;
};

inline void append_words(std::vector<std::string>& out, const std::string& text) {
  for (auto& w : split_words(text)) out.push_back(std::move(w));
}

inline void append_list(std::vector<std::string>& out, const std::vector<std::string>& items) {
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out.push_back("and");
    append_words(out, items[i]);
  }
}

// Builds one sentence for a mention and returns it with the trigger offset inside it.
inline std::pair<std::vector<std::string>, int> mention_sentence(Rng& rng, const std::string& trigger,
                                                                 const std::vector<std::string>& participants,
                                                                 const std::string& location,
                                                                 const std::vector<std::string>& filler) {
  std::vector<std::string> s;
  int trigger_at = 0;
  if (participants.empty() && location.empty()) {
    switch (rng.index(3)) {
      case 0:
        s = {"officials", "said", "the"};
        trigger_at = static_cast<int>(s.size());
        s.push_back(trigger);
        s.insert(s.end(), {"was", rng.pick(filler), rng.pick(filler)});
        break;
      case 1:
        s = {"the"};
        trigger_at = 1;
        s.push_back(trigger);
        s.insert(s.end(), {"drew", rng.pick(filler), "reactions"});
        break;
      default:
        s = {rng.pick(filler), "reported", "another"};
        trigger_at = static_cast<int>(s.size());
        s.push_back(trigger);
        break;
    }
  } else {
    switch (rng.index(3)) {
      case 0:
        if (!participants.empty()) {
          append_list(s, participants);
          s.insert(s.end(), {"were", "involved", "in"});
        }
        s.push_back("the");
        trigger_at = static_cast<int>(s.size());
        s.push_back(trigger);
        if (!location.empty()) {
          s.push_back("in");
          append_words(s, location);
        }
        break;
      case 1:
        s = {"the"};
        trigger_at = 1;
        s.push_back(trigger);
        if (!participants.empty()) {
          s.push_back("involving");
          append_list(s, participants);
        }
        if (!location.empty()) {
          s.insert(s.end(), {"took", "place", "in"});
          append_words(s, location);
        }
        break;
      default:
        s = {"reports", "said", "the"};
        trigger_at = static_cast<int>(s.size());
        s.push_back(trigger);
        if (!participants.empty()) {
          s.push_back("of");
          append_list(s, participants);
        }
        if (!location.empty()) {
          s.push_back("at");
          append_words(s, location);
        }
        s.insert(s.end(), {"was", "confirmed"});
        break;
    }
  }
  s.push_back(".");
  return {s, trigger_at};
}

}  // namespace detail

// Deterministic for a given (config, seed). Each chain is one event instance:
// its mentions share the event type and draw arguments from the instance's
// participants and location, while trigger words vary over the scenario's synonyms.
inline std::vector<Document> generate_synthetic_corpus(const SyntheticConfig& config, std::uint64_t seed) {
  if (config.scenarios.empty()) throw ConfigError("synthetic corpus: empty scenario inventory");
  for (const auto& sc : config.scenarios) {
    if (sc.event_type.empty() || sc.triggers.empty()) {
      throw ConfigError("synthetic corpus: scenario '" + sc.event_type + "' needs a type and triggers");
    }
  }
  if (config.num_docs < 0 || config.mentions_per_doc < 1 || config.max_chain < 2) {
    throw ConfigError("synthetic corpus: invalid document or chain sizes");
  }
  const std::vector<std::string> filler = config.filler_words.empty() ? default_filler_words() : config.filler_words;

  Rng rng(seed);
  std::vector<Document> docs;
  docs.reserve(static_cast<std::size_t>(config.num_docs));
  for (int d = 0; d < config.num_docs; ++d) {
    int n = config.mentions_per_doc;
    if (config.mention_jitter > 0) {
      n += static_cast<int>(rng.index(static_cast<std::size_t>(2 * config.mention_jitter + 1))) - config.mention_jitter;
    }
    n = std::max(n, 1);

    // Split n mentions into event instances.
    std::vector<detail::EventInstance> instances;
    std::vector<std::size_t> mention_instance;
    int remaining = n;
    while (remaining > 0) {
      int size = 1;
      if (remaining >= 2 && !rng.bernoulli(config.singleton_rate)) {
        size = 2 + static_cast<int>(rng.index(static_cast<std::size_t>(config.max_chain - 1)));
        size = std::min(size, remaining);
      }
      detail::EventInstance inst;
      inst.scenario = &rng.pick(config.scenarios);
      if (!inst.scenario->participants.empty()) {
        const std::size_t count = 1 + rng.index(std::min<std::size_t>(2, inst.scenario->participants.size()));
        std::vector<std::string> pool = inst.scenario->participants;
        rng.shuffle(pool);
        inst.participants.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(count));
      }
      if (!inst.scenario->locations.empty()) inst.location = rng.pick(inst.scenario->locations);
      for (int k = 0; k < size; ++k) mention_instance.push_back(instances.size());
      instances.push_back(std::move(inst));
      remaining -= size;
    }
    rng.shuffle(mention_instance);

    Document doc;
    doc.doc_id = "doc" + std::to_string(d);
    int offset = 0;
    std::vector<Chain> chains(instances.size());
    for (std::size_t m = 0; m < mention_instance.size(); ++m) {
      const auto& inst = instances[mention_instance[m]];
      EventMention em;
      em.mention_id = "m" + std::to_string(m);
      em.event_type = inst.scenario->event_type;
      std::vector<std::string> parts;
      std::string loc;
      if (rng.bernoulli(config.argument_rate) && (!inst.participants.empty() || !inst.location.empty())) {
        if (!inst.participants.empty()) {
          parts = inst.participants;
          if (parts.size() > 1 && rng.bernoulli(0.5)) parts.resize(1);
        }
        if (!inst.location.empty() && (parts.empty() || rng.bernoulli(0.6))) loc = inst.location;
      }
      const std::string& trigger = rng.pick(inst.scenario->triggers);
      auto [sentence, at] = detail::mention_sentence(rng, trigger, parts, loc, filler);
      const int trigger_len = static_cast<int>(detail::split_words(trigger).size());
      em.trigger_span = {offset + at, offset + at + trigger_len - 1};
      for (const auto& p : parts) em.participants.push_back({p, ArgumentRole::Participant});
      if (!loc.empty()) em.locations.push_back({loc, ArgumentRole::Location});
      offset += static_cast<int>(sentence.size());
      doc.sentences.push_back(std::move(sentence));
      chains[mention_instance[m]].push_back(em.mention_id);
      doc.mentions.push_back(std::move(em));

      const auto fillers = config.max_filler_sentences > 0
                               ? rng.index(static_cast<std::size_t>(config.max_filler_sentences) + 1)
                               : 0;
      for (std::size_t f = 0; f < fillers; ++f) {
        std::vector<std::string> s;
        const std::size_t len = 4 + rng.index(4);
        for (std::size_t w = 0; w < len; ++w) s.push_back(rng.pick(filler));
        s.push_back(".");
        offset += static_cast<int>(s.size());
        doc.sentences.push_back(std::move(s));
      }
    }
    // Chains ordered by their first mention.
    std::sort(chains.begin(), chains.end(), [](const Chain& a, const Chain& b) {
      return std::stoi(a.front().substr(1)) < std::stoi(b.front().substr(1));
    });
    doc.chains = std::move(chains);
    validate_document(doc);
    docs.push_back(std::move(doc));
  }
  return docs;
}

inline Scenario scenario_from_json(const nlohmann::json& j) {
  Scenario s;
  s.event_type = j.at("type").get<std::string>();
  s.triggers = j.at("triggers").get<std::vector<std::string>>();
  s.participants = j.value("participants", std::vector<std::string>{});
  s.locations = j.value("locations", std::vector<std::string>{});
  return s;
}

inline SyntheticConfig synthetic_config_from_json(const nlohmann::json& j) {
  SyntheticConfig c = default_synthetic_config();
  c.num_docs = j.value("num_docs", c.num_docs);
  c.mentions_per_doc = j.value("mentions_per_doc", c.mentions_per_doc);
  c.mention_jitter = j.value("mention_jitter", c.mention_jitter);
  c.singleton_rate = j.value("singleton_rate", c.singleton_rate);
  c.max_chain = j.value("max_chain", c.max_chain);
  c.argument_rate = j.value("argument_rate", c.argument_rate);
  c.max_filler_sentences = j.value("max_filler_sentences", c.max_filler_sentences);
  if (j.contains("scenarios")) {
    c.scenarios.clear();
    for (const auto& s : j.at("scenarios")) c.scenarios.push_back(scenario_from_json(s));
  }
  if (j.contains("filler_words")) c.filler_words = j.at("filler_words").get<std::vector<std::string>>();
  return c;
}

// Deterministic split: every k-th document (k = round(1/test_fraction)) is held out.
inline std::pair<std::vector<Document>, std::vector<Document>> split_corpus(const std::vector<Document>& docs,
                                                                            double test_fraction) {
  if (test_fraction <= 0.0 || test_fraction >= 1.0) throw ConfigError("test fraction must be in (0, 1)");
  const auto stride = static_cast<std::size_t>(std::max(2.0, std::round(1.0 / test_fraction)));
  std::vector<Document> train, test;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    ((i % stride == stride - 1) ? test : train).push_back(docs[i]);
  }
  return {train, test};
}

// ---------------------------------------------------------------------------
// Cluster files: "#doc <id>" header lines, then one cluster per line as
// space-separated mention ids. Other lines starting with '#' are comments.

using Partition = std::vector<std::vector<std::string>>;

struct DocumentClusters {
  std::string doc_id;
  Partition clusters;
};

inline std::vector<DocumentClusters> read_cluster_file(std::istream& in, const std::string& source = "<stream>") {
  std::vector<DocumentClusters> out;
  std::unordered_set<std::string> seen_in_doc;
  std::unordered_set<std::string> seen_docs;
  std::string line;
  std::size_t line_no = 0;
  const auto fail = [&](const std::string& what) {
    throw ParseError(source + ":" + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (line.rfind("#doc", 0) == 0) {
      const auto words = detail::split_words(line.substr(4));
      if (line.size() > 4 && line[4] != ' ' && line[4] != '\t') fail("malformed document header");
      if (words.size() != 1) fail("document header needs exactly one id");
      if (!seen_docs.insert(words[0]).second) fail("duplicate document '" + words[0] + "'");
      out.push_back({words[0], {}});
      seen_in_doc.clear();
      continue;
    }
    if (line[0] == '#') continue;
    if (out.empty()) fail("cluster line before any '#doc' header");
    auto ids = detail::split_words(line);
    for (const auto& id : ids) {
      if (!seen_in_doc.insert(id).second) fail("mention '" + id + "' listed twice");
    }
    out.back().clusters.push_back(std::move(ids));
  }
  return out;
}

inline std::vector<DocumentClusters> load_cluster_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open cluster file '" + path + "'");
  return read_cluster_file(in, path);
}

inline void write_cluster_file(std::ostream& out, const std::vector<DocumentClusters>& docs,
                               const std::string& comment = "") {
  if (!comment.empty()) out << "# " << comment << '\n';
  for (const auto& d : docs) {
    out << "#doc " << d.doc_id << '\n';
    for (const auto& c : d.clusters) {
      for (std::size_t i = 0; i < c.size(); ++i) out << (i ? " " : "") << c[i];
      out << '\n';
    }
  }
}

inline std::vector<DocumentClusters> gold_clusters(const std::vector<Document>& docs) {
  std::vector<DocumentClusters> out;
  for (const auto& d : docs) out.push_back({d.doc_id, d.chains});
  return out;
}

}  // namespace ecr
