#pragma once

// Prompt construction: prefix, anchor and inference templates around a
// truncated document segment, plus the four single-mask baseline templates.

#include <algorithm>
#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ecr/corpus.hpp"
#include "ecr/encoder.hpp"
#include "ecr/errors.hpp"

namespace ecr {

// Bump when any template wording below changes; tests/fixtures pins the rendering.
inline constexpr std::string_view kTemplateVersion = "templates-v1";

enum class TemplateVariant { CorefPrompt, Normal, Connect, Question, Soft };

inline const char* to_string(TemplateVariant v) {
  switch (v) {
    case TemplateVariant::CorefPrompt: return "corefprompt";
    case TemplateVariant::Normal: return "normal";
    case TemplateVariant::Connect: return "connect";
    case TemplateVariant::Question: return "question";
    case TemplateVariant::Soft: return "soft";
  }
  return "?";
}

inline TemplateVariant parse_variant(const std::string& name) {
  for (auto v : {TemplateVariant::CorefPrompt, TemplateVariant::Normal, TemplateVariant::Connect,
                 TemplateVariant::Question, TemplateVariant::Soft}) {
    if (name == to_string(v)) return v;
  }
  throw ConfigError("unknown template variant '" + name + "'");
}

enum class Slot { Type1, Type2, TypeCompat, ArgCompat, Coref };

inline const char* to_string(Slot s) {
  switch (s) {
    case Slot::Type1: return "type_1";
    case Slot::Type2: return "type_2";
    case Slot::TypeCompat: return "type_compat";
    case Slot::ArgCompat: return "arg_compat";
    case Slot::Coref: return "coref";
  }
  return "?";
}

struct PromptLayout {
  TemplateVariant variant = TemplateVariant::CorefPrompt;
  std::vector<int> ids;
  std::map<Slot, int> slots;
  // Trigger copies inside the two anchor templates (the pooling spans).
  std::optional<TokenSpan> anchor_trigger_1;
  std::optional<TokenSpan> anchor_trigger_2;
  // Every position range holding a copy of either trigger.
  std::vector<TokenSpan> trigger_spans;
  std::vector<int> marker_positions;
  // Word ids making up the two triggers.
  std::set<int> trigger_token_ids;

  int slot(Slot s) const {
    auto it = slots.find(s);
    if (it == slots.end()) throw LookupError(std::string("layout has no slot ") + to_string(s));
    return it->second;
  }
};

namespace templates {

inline const std::vector<std::string>& prefix_head() {
  static const std::vector<std::string> w = {"In", "the", "following", "text", ",", "the", "focus", "is",
                                             "on", "the", "events", "expressed", "by"};
  return w;
}
inline const std::vector<std::string>& prefix_tail() {
  static const std::vector<std::string> w = {",",     "and",  "it",   "needs", "to",  "judge",     "whether",
                                             "they",  "refer", "to",  "the",   "same", "or", "different", "events", "."};
  return w;
}
inline const std::vector<std::string>& inference_head() {
  static const std::vector<std::string> w = {"In", "conclusion", ",", "the", "events", "expressed", "by"};
  return w;
}
inline const std::vector<std::string>& baseline_head() {
  static const std::vector<std::string> w = {"In", "the", "following", "text", ","};
  return w;
}

// Every literal word any template emits; these must be in the vocabulary.
inline std::vector<std::string> words() {
  std::vector<std::string> out;
  const auto add = [&out](const std::vector<std::string>& ws) { out.insert(out.end(), ws.begin(), ws.end()); };
  add(prefix_head());
  add(prefix_tail());
  add(inference_head());
  add(baseline_head());
  add({"and", "have", "event", "type", "participants", "so", "they", "refer", "to", "Here", "expresses", "a",
       "with", "as", "at", "events", "expressed", "by", "the", "do", "same", "?", ":", ".", ","});
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace templates

inline void register_template_words(Vocabulary& vocab) {
  for (const auto& w : templates::words()) vocab.add_word(w);
}

namespace detail {

enum class Which { First, Second };

class LayoutBuilder {
 public:
  LayoutBuilder(const Vocabulary& vocab, PromptLayout& layout) : vocab_(vocab), layout_(layout) {}

  int pos() const { return static_cast<int>(layout_.ids.size()); }

  void words(const std::vector<std::string>& ws) {
    for (const auto& w : ws) layout_.ids.push_back(vocab_.require_word(w));
  }
  void word(const std::string& w) { layout_.ids.push_back(vocab_.require_word(w)); }

  void marker(int id) {
    layout_.marker_positions.push_back(pos());
    layout_.ids.push_back(id);
  }

  void slot(Slot s) {
    layout_.slots[s] = pos();
    layout_.ids.push_back(vocab_.mask());
  }

  void special(int id) { layout_.ids.push_back(id); }

  // Appends a marked trigger copy; returns the span of the trigger tokens.
  TokenSpan marked_trigger(Which which, std::span<const int> trigger_ids) {
    marker(which == Which::First ? vocab_.e1s() : vocab_.e2s());
    const int start = pos();
    layout_.ids.insert(layout_.ids.end(), trigger_ids.begin(), trigger_ids.end());
    const TokenSpan span{start, pos() - 1};
    layout_.trigger_spans.push_back(span);
    marker(which == Which::First ? vocab_.e1e() : vocab_.e2e());
    return span;
  }

  void text(std::span<const int> ids) { layout_.ids.insert(layout_.ids.end(), ids.begin(), ids.end()); }

 private:
  const Vocabulary& vocab_;
  PromptLayout& layout_;
};

inline std::vector<int> trigger_ids(const Document& doc, const EventMention& m, const Vocabulary& vocab) {
  const auto toks = doc.tokens();
  std::vector<int> out;
  for (int t = m.trigger_span.start; t <= m.trigger_span.end; ++t) out.push_back(vocab.word_id(toks[static_cast<std::size_t>(t)]));
  return out;
}

inline std::vector<int> argument_list_ids(const std::vector<ArgumentMention>& args, const Vocabulary& vocab) {
  std::vector<int> out;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i > 0) out.push_back(vocab.require_word(","));
    for (const auto& w : split_words(args[i].text)) out.push_back(vocab.word_id(w));
  }
  return out;
}

inline void marked_pair(LayoutBuilder& b, std::span<const int> first, std::span<const int> second) {
  b.marked_trigger(Which::First, first);
  b.word("and");
  b.marked_trigger(Which::Second, second);
}

}  // namespace detail

struct AnchorTemplate {
  std::vector<int> ids;
  int mask_offset = 0;
  TokenSpan trigger;  // offsets within ids
};

// "Here [E1S] ev [E1E] expresses a [MASK] event with p1, p2 as participants at l1, l2"
// Empty participant or location lists drop their clause.
inline AnchorTemplate render_anchor(const Document& doc, const EventMention& mention, bool first,
                                    const Vocabulary& vocab) {
  PromptLayout scratch;
  detail::LayoutBuilder b(vocab, scratch);
  AnchorTemplate out;
  b.word("Here");
  out.trigger = b.marked_trigger(first ? detail::Which::First : detail::Which::Second,
                                 detail::trigger_ids(doc, mention, vocab));
  b.words({"expresses", "a"});
  out.mask_offset = b.pos();
  b.special(vocab.mask());
  b.word("event");
  if (!mention.participants.empty()) {
    b.word("with");
    b.text(detail::argument_list_ids(mention.participants, vocab));
    b.words({"as", "participants"});
  }
  if (!mention.locations.empty()) {
    b.word("at");
    b.text(detail::argument_list_ids(mention.locations, vocab));
  }
  out.ids = std::move(scratch.ids);
  return out;
}

namespace detail {

// Window [start, end] of document tokens holding both triggers, at most budget long.
inline std::pair<int, int> segment_window(int n_tokens, const TokenSpan& a, const TokenSpan& b, int budget) {
  const int lo = std::min(a.start, b.start);
  const int hi = std::max(a.end, b.end);
  if (hi - lo + 1 > budget) {
    throw LayoutError("length budget " + std::to_string(budget) + " cannot hold both trigger regions (" +
                      std::to_string(hi - lo + 1) + " tokens)");
  }
  if (n_tokens <= budget) return {0, n_tokens - 1};
  const int center = (lo + hi) / 2;
  int start = center - budget / 2;
  start = std::min(start, lo);
  start = std::max(start, hi - budget + 1);
  start = std::clamp(start, 0, n_tokens - budget);
  return {start, start + budget - 1};
}

}  // namespace detail

// Builds the prompt for a mention pair; the earlier mention is ev_i.
// CorefPrompt: prefix + segment with anchors + inference template (five mask slots).
// Baselines: Table-style head with one mask slot + marked segment.
inline PromptLayout assemble_prompt(const Document& doc, const MentionPair& pair, const Vocabulary& vocab,
                                    TemplateVariant variant = TemplateVariant::CorefPrompt, int max_len = 512) {
  const EventMention& m1 = doc.mention(pair.first);
  const EventMention& m2 = doc.mention(pair.second);
  const auto& s1 = m1.trigger_span;
  const auto& s2 = m2.trigger_span;
  if (s1.start <= s2.end && s2.start <= s1.end) {
    throw LayoutError("mentions '" + pair.first + "' and '" + pair.second + "' have overlapping triggers");
  }
  const std::vector<int> t1 = detail::trigger_ids(doc, m1, vocab);
  const std::vector<int> t2 = detail::trigger_ids(doc, m2, vocab);
  const bool coref_prompt = variant == TemplateVariant::CorefPrompt;

  std::optional<AnchorTemplate> anchor1, anchor2;
  if (coref_prompt) {
    anchor1 = render_anchor(doc, m1, true, vocab);
    anchor2 = render_anchor(doc, m2, false, vocab);
  }

  PromptLayout layout;
  layout.variant = variant;
  // [UNK] says nothing about the trigger; its recorded spans are still masked.
  for (int id : t1) if (id != vocab.unk()) layout.trigger_token_ids.insert(id);
  for (int id : t2) if (id != vocab.unk()) layout.trigger_token_ids.insert(id);
  detail::LayoutBuilder b(vocab, layout);

  // Head.
  switch (variant) {
    case TemplateVariant::CorefPrompt:
      b.words(templates::prefix_head());
      detail::marked_pair(b, t1, t2);
      b.words(templates::prefix_tail());
      break;
    case TemplateVariant::Normal:
      b.words(templates::baseline_head());
      b.words({"events", "expressed", "by"});
      detail::marked_pair(b, t1, t2);
      b.words({"refer", "to"});
      b.slot(Slot::Coref);
      b.words({"event", ":"});
      break;
    case TemplateVariant::Connect:
      b.words(templates::baseline_head());
      b.words({"the", "event", "expressed", "by"});
      b.marked_trigger(detail::Which::First, t1);
      b.slot(Slot::Coref);
      b.words({"the", "event", "expressed", "by"});
      b.marked_trigger(detail::Which::Second, t2);
      b.word(":");
      break;
    case TemplateVariant::Question:
      b.words(templates::baseline_head());
      b.words({"do", "events", "expressed", "by"});
      detail::marked_pair(b, t1, t2);
      b.words({"refer", "to", "the", "same", "event", "?"});
      b.slot(Slot::Coref);
      b.word(".");
      break;
    case TemplateVariant::Soft:
      b.words(templates::baseline_head());
      b.special(vocab.learnable(1));
      b.marked_trigger(detail::Which::First, t1);
      b.special(vocab.learnable(2));
      b.special(vocab.learnable(3));
      b.marked_trigger(detail::Which::Second, t2);
      b.special(vocab.learnable(4));
      b.special(vocab.learnable(5));
      b.slot(Slot::Coref);
      b.special(vocab.learnable(6));
      b.word(":");
      break;
  }
  const int head_len = b.pos();

  // Inference template length is fixed by the trigger lengths.
  const int inference_len = coref_prompt
                                ? static_cast<int>(templates::inference_head().size()) + 2 + static_cast<int>(t1.size()) +
                                      1 + 2 + static_cast<int>(t2.size()) + 15
                                : 0;
  const int anchors_len = coref_prompt ? static_cast<int>(anchor1->ids.size() + anchor2->ids.size()) : 0;
  const int budget = max_len - head_len - inference_len - anchors_len - 4;
  if (budget <= 0) throw LayoutError("length budget " + std::to_string(max_len) + " too small for the templates");
  const int n_tokens = static_cast<int>(doc.token_count());
  const auto [ws, we] = detail::segment_window(n_tokens, s1, s2, budget);

  // Segment, with in-segment triggers marked and anchors following their trigger.
  const auto tokens = doc.tokens();
  for (int t = ws; t <= we; ++t) {
    const bool is_first = t == s1.start;
    const bool is_second = t == s2.start;
    if (is_first || is_second) {
      const auto& span = is_first ? s1 : s2;
      b.marked_trigger(is_first ? detail::Which::First : detail::Which::Second, is_first ? t1 : t2);
      if (coref_prompt) {
        const AnchorTemplate& anchor = is_first ? *anchor1 : *anchor2;
        const int base = b.pos();
        // Anchor markers and trigger copy are recorded at their absolute positions.
        for (std::size_t k = 0; k < anchor.ids.size(); ++k) {
          const int id = anchor.ids[k];
          if (id == vocab.e1s() || id == vocab.e1e() || id == vocab.e2s() || id == vocab.e2e()) {
            layout.marker_positions.push_back(base + static_cast<int>(k));
          }
        }
        b.text(anchor.ids);
        const TokenSpan copy{base + anchor.trigger.start, base + anchor.trigger.end};
        layout.trigger_spans.push_back(copy);
        layout.slots[is_first ? Slot::Type1 : Slot::Type2] = base + anchor.mask_offset;
        (is_first ? layout.anchor_trigger_1 : layout.anchor_trigger_2) = copy;
      }
      t = span.end;
      continue;
    }
    b.special(vocab.word_id(tokens[static_cast<std::size_t>(t)]));
  }

  if (coref_prompt) {
    b.words(templates::inference_head());
    detail::marked_pair(b, t1, t2);
    b.word("have");
    b.slot(Slot::TypeCompat);
    b.words({"event", "type", "and"});
    b.slot(Slot::ArgCompat);
    b.words({"participants", ",", "so", "they", "refer", "to"});
    b.slot(Slot::Coref);
    b.words({"event", "."});
  }

  if (static_cast<int>(layout.ids.size()) > max_len) {
    throw LayoutError("assembled layout exceeds max length");  // arithmetic above guarantees otherwise
  }
  return layout;
}

// Replaces every trigger token (all recorded copies, and any other occurrence
// of a trigger word) with [MASK]. Slots are untouched.
inline PromptLayout mask_triggers(const PromptLayout& layout, const Vocabulary& vocab) {
  PromptLayout out = layout;
  for (const auto& span : layout.trigger_spans) {
    for (int p = span.start; p <= span.end; ++p) out.ids[static_cast<std::size_t>(p)] = vocab.mask();
  }
  for (auto& id : out.ids) {
    if (vocab.kind(id) == TokenKind::Word && layout.trigger_token_ids.contains(id)) id = vocab.mask();
  }
  return out;
}

// Space-joined surface form; no space before , . : ?
inline std::string detokenize(std::span<const int> ids, const Vocabulary& vocab) {
  std::string out;
  for (int id : ids) {
    const std::string& t = vocab.token(id);
    const bool attach = t == "," || t == "." || t == ":" || t == "?";
    if (!out.empty() && !attach) out += ' ';
    out += t;
  }
  return out;
}

inline std::string detokenize(const PromptLayout& layout, const Vocabulary& vocab) {
  return detokenize(layout.ids, vocab);
}

}  // namespace ecr
