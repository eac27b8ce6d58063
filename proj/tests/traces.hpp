#pragma once

// Three-mention sampling fixture shared by the unit tests and the acceptance run.

#include <string>
#include <utility>
#include <vector>

#include "ecr/sampling.hpp"

namespace ecr::testing {

// Mentions a, b, c with (a, b) coreferent; s(a,b) = .95, s(a,c) = .9, s(b,c) = .2.
struct Trace {
  std::vector<MentionPair> pairs;
  SimilarityIndex index;
};

inline Trace three_mentions() {
  Trace t;
  t.pairs = {{"d", "a", "b", true}, {"d", "a", "c", false}, {"d", "b", "c", false}};
  Matrix cos(3, 3);
  cos << 1.0, 0.95, 0.9, 0.95, 1.0, 0.2, 0.9, 0.2, 1.0;
  t.index.set_document("d", {"a", "b", "c"}, cos);
  return t;
}

using Ids = std::vector<std::pair<std::string, std::string>>;

inline Ids ids(const std::vector<MentionPair>& ps) {
  Ids out;
  for (const auto& p : ps) out.emplace_back(p.first, p.second);
  return out;
}

inline SamplingConfig strategy(SamplingStrategy s, int k = 3, double gamma = 0.2) {
  SamplingConfig c;
  c.strategy = s;
  c.k = k;
  c.gamma = gamma;
  return c;
}

// The expected outcomes: NM with k=1 keeps all three pairs, ENN-2 at gamma .5
// drops (b,c), ENN-1 with k=1 keeps only (a,b).
inline bool hand_traces_hold() {
  const Trace t = three_mentions();
  bool ok = ids(apply_sampling(t.pairs, t.index, strategy(SamplingStrategy::CorefNM, 1))) ==
            Ids{{"a", "b"}, {"a", "c"}, {"b", "c"}};
  ok = ok && ids(apply_sampling(t.pairs, t.index, strategy(SamplingStrategy::CorefENN2, 3, 0.5))) ==
                 Ids{{"a", "b"}, {"a", "c"}};
  for (Enn1Mode mode : {Enn1Mode::RelativeLabel, Enn1Mode::NeighborAgreement}) {
    auto c = strategy(SamplingStrategy::CorefENN1, 1);
    c.enn1_mode = mode;
    ok = ok && ids(apply_sampling(t.pairs, t.index, c)) == Ids{{"a", "b"}};
  }
  return ok;
}

}  // namespace ecr::testing
