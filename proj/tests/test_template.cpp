#include <gtest/gtest.h>

#include <fstream>

#include "ecr/template.hpp"
#include "support.hpp"

using namespace ecr;
using ecr::testing::small_document;

namespace {

Vocabulary fixture_vocab(const Document& d) {
  Vocabulary v = build_vocab({d});
  register_template_words(v);
  return v;
}

MentionPair first_pair(const Document& d) { return enumerate_pairs(d).front(); }

int count_masks(const PromptLayout& l, const Vocabulary& v) {
  return static_cast<int>(std::count(l.ids.begin(), l.ids.end(), v.mask()));
}

Document suicide_document() {
  Document d;
  d.doc_id = "s";
  d.sentences = {{"a", "suicide", "at", "a", "Rome", "building", "."}, {"her", "death", "shocked", "many", "."}};
  d.mentions = {{"e1", {1, 1}, "Life.Die", {{"her", ArgumentRole::Participant}}, {{"Rome building", ArgumentRole::Location}}},
                {"e2", {8, 8}, "Life.Die", {}, {}}};
  d.chains = {{"e1", "e2"}};
  return d;
}

}  // namespace

TEST(Template, AnchorWording) {
  const Document d = suicide_document();
  const Vocabulary v = fixture_vocab(d);
  EXPECT_EQ(detokenize(render_anchor(d, d.mentions[0], true, v).ids, v),
            "Here [E1S] suicide [E1E] expresses a [MASK] event with her as participants at Rome building");
  EXPECT_EQ(detokenize(render_anchor(d, d.mentions[1], true, v).ids, v),
            "Here [E1S] death [E1E] expresses a [MASK] event");
  Document two = d;
  two.mentions[0].participants.push_back({"Rome", ArgumentRole::Participant});
  EXPECT_EQ(detokenize(render_anchor(two, two.mentions[0], false, v).ids, v),
            "Here [E2S] suicide [E2E] expresses a [MASK] event with her, Rome as participants at Rome building");
}

TEST(Template, PrefixAndInferenceWording) {
  const Document d = small_document();
  const Vocabulary v = fixture_vocab(d);
  const PromptLayout l = assemble_prompt(d, first_pair(d), v);
  const std::string text = detokenize(l, v);
  const std::string prefix =
      "In the following text, the focus is on the events expressed by [E1S] attacked [E1E] and [E2S] assault [E2E], "
      "and it needs to judge whether they refer to the same or different events.";
  const std::string inference =
      "In conclusion, the events expressed by [E1S] attacked [E1E] and [E2S] assault [E2E] have [MASK] event type "
      "and [MASK] participants, so they refer to [MASK] event.";
  EXPECT_EQ(text.substr(0, prefix.size()), prefix);
  ASSERT_GE(text.size(), inference.size());
  EXPECT_EQ(text.substr(text.size() - inference.size()), inference);
  EXPECT_EQ(count_masks(l, v), 5);
  EXPECT_EQ(l.slots.size(), 5u);
  for (const auto& [slot, pos] : l.slots) EXPECT_EQ(l.ids[static_cast<std::size_t>(pos)], v.mask());
  // Anchors sit right after each in-segment trigger and hold the type slots.
  ASSERT_TRUE(l.anchor_trigger_1 && l.anchor_trigger_2);
  EXPECT_EQ(v.token(l.ids[static_cast<std::size_t>(l.anchor_trigger_1->start)]), "attacked");
  EXPECT_EQ(v.token(l.ids[static_cast<std::size_t>(l.anchor_trigger_1->start - 2)]), "Here");
  EXPECT_EQ(v.token(l.ids[static_cast<std::size_t>(l.anchor_trigger_1->start - 3)]), "[E1E]");
  EXPECT_LT(l.slot(Slot::Type1), l.slot(Slot::Type2));
}

TEST(Template, BaselineWording) {
  const Document d = small_document();
  const Vocabulary v = fixture_vocab(d);
  const auto pair = first_pair(d);
  const auto starts_with = [&](TemplateVariant var, const std::string& head) {
    const PromptLayout l = assemble_prompt(d, pair, v, var);
    EXPECT_EQ(l.slots.size(), 1u);
    EXPECT_EQ(count_masks(l, v), 1);
    const std::string text = detokenize(l, v);
    EXPECT_EQ(text.substr(0, head.size()), head) << to_string(var);
  };
  starts_with(TemplateVariant::Normal,
              "In the following text, events expressed by [E1S] attacked [E1E] and [E2S] assault [E2E] refer to "
              "[MASK] event: troops");
  starts_with(TemplateVariant::Connect,
              "In the following text, the event expressed by [E1S] attacked [E1E] [MASK] the event expressed by "
              "[E2S] assault [E2E]: troops");
  starts_with(TemplateVariant::Question,
              "In the following text, do events expressed by [E1S] attacked [E1E] and [E2S] assault [E2E] refer "
              "to the same event? [MASK]. troops");
  starts_with(TemplateVariant::Soft,
              "In the following text, [L1] [E1S] attacked [E1E] [L2] [L3] [E2S] assault [E2E] [L4] [L5] [MASK] "
              "[L6]: troops");
}

TEST(Template, MatchesPinnedRenderings) {
  const Document d = small_document();
  const Vocabulary v = fixture_vocab(d);
  std::ifstream in(std::string(ECR_FIXTURES) + "/templates_v1.txt");
  ASSERT_TRUE(in) << "missing fixture";
  std::string line;
  int checked = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    ASSERT_NE(tab, std::string::npos);
    const auto variant = parse_variant(line.substr(0, tab));
    EXPECT_EQ(detokenize(assemble_prompt(d, first_pair(d), v, variant), v), line.substr(tab + 1))
        << "template wording changed; bump kTemplateVersion and the fixture";
    ++checked;
  }
  EXPECT_EQ(checked, 5);
}

TEST(Template, TruncationKeepsTemplatesAndTriggers) {
  Document d = small_document();
  // Pad the document with filler so the window must shrink.
  std::vector<std::string> filler(300, "the");
  d.sentences.insert(d.sentences.begin(), filler);
  d.sentences.push_back(filler);
  for (auto& m : d.mentions) m.trigger_span = {m.trigger_span.start + 300, m.trigger_span.end + 300};
  const Vocabulary v = fixture_vocab(d);
  const auto pair = first_pair(d);
  const PromptLayout full = assemble_prompt(d, pair, v, TemplateVariant::CorefPrompt, 1000);
  const PromptLayout cut = assemble_prompt(d, pair, v, TemplateVariant::CorefPrompt, 160);
  EXPECT_LE(cut.ids.size(), 160u);
  EXPECT_LT(cut.ids.size(), full.ids.size());
  EXPECT_EQ(cut.slots.size(), 5u);
  EXPECT_EQ(cut.marker_positions.size(), full.marker_positions.size());
  EXPECT_EQ(cut.trigger_spans.size(), full.trigger_spans.size());
  for (int p : cut.marker_positions) {
    const int id = cut.ids[static_cast<std::size_t>(p)];
    EXPECT_TRUE(id == v.e1s() || id == v.e1e() || id == v.e2s() || id == v.e2e());
  }
  const std::string text = detokenize(cut, v);
  EXPECT_NE(text.find("expresses a [MASK] event with troops as participants at Gaza"), std::string::npos);
  EXPECT_THROW(assemble_prompt(d, pair, v, TemplateVariant::CorefPrompt, 90), LayoutError);
}

TEST(Template, TriggersTooFarApartIsALayoutError) {
  Document d = small_document();
  d.sentences.insert(d.sentences.begin() + 1, std::vector<std::string>(400, "the"));
  d.mentions[1].trigger_span = {408, 408};
  d.mentions[2].trigger_span = {409, 409};
  const Vocabulary v = fixture_vocab(d);
  EXPECT_THROW(assemble_prompt(d, first_pair(d), v, TemplateVariant::CorefPrompt, 200), LayoutError);
}

TEST(Template, MaskTriggers) {
  const Document d = small_document();
  const Vocabulary v = fixture_vocab(d);
  for (auto variant : {TemplateVariant::CorefPrompt, TemplateVariant::Normal, TemplateVariant::Soft}) {
    const PromptLayout l = assemble_prompt(d, first_pair(d), v, variant);
    const PromptLayout m = mask_triggers(l, v);
    ASSERT_EQ(m.ids.size(), l.ids.size());
    for (std::size_t i = 0; i < l.ids.size(); ++i) {
      if (l.trigger_token_ids.contains(l.ids[i])) {
        EXPECT_EQ(m.ids[i], v.mask());
      } else {
        EXPECT_EQ(m.ids[i], l.ids[i]);
      }
    }
    for (int id : m.ids) EXPECT_FALSE(l.trigger_token_ids.contains(id));
    EXPECT_EQ(mask_triggers(m, v).ids, m.ids);
    EXPECT_EQ(m.slots, l.slots);
  }
}

TEST(Template, VariantNames) {
  for (const char* n : {"corefprompt", "normal", "connect", "question", "soft"}) {
    EXPECT_STREQ(to_string(parse_variant(n)), n);
  }
  EXPECT_THROW(parse_variant("cloze"), ConfigError);
}
