#pragma once

// Coreference scores (MUC, B3, CEAF_e, BLANC and their average) with counts
// summed across documents, plus pairwise classification reports by argument
// state.

#include <cstdio>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "ecr/corpus.hpp"
#include "ecr/errors.hpp"
#include "ecr/hungarian.hpp"

namespace ecr {

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

inline double harmonic(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

inline Prf make_prf(double p, double r) { return {p, r, harmonic(p, r)}; }

inline double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

// Numerators and denominators for one metric, summable across documents.
struct MetricCounts {
  double recall_num = 0.0, recall_den = 0.0;
  double precision_num = 0.0, precision_den = 0.0;

  MetricCounts& operator+=(const MetricCounts& o) {
    recall_num += o.recall_num;
    recall_den += o.recall_den;
    precision_num += o.precision_num;
    precision_den += o.precision_den;
    return *this;
  }

  Prf score() const { return make_prf(ratio(precision_num, precision_den), ratio(recall_num, recall_den)); }
};

// Link-confusion counts over all unordered mention pairs.
struct BlancCounts {
  double rc = 0.0;  // coreferent in both
  double wc = 0.0;  // coreferent in system only
  double wn = 0.0;  // coreferent in gold only
  double rn = 0.0;  // non-coreferent in both

  BlancCounts& operator+=(const BlancCounts& o) {
    rc += o.rc;
    wc += o.wc;
    wn += o.wn;
    rn += o.rn;
    return *this;
  }

  // Mean of the coreference-link and non-coreference-link scores. A class
  // with no links on either side is left out; no pairs at all scores 0.
  Prf score() const {
    const bool coref_defined = rc + wc + wn > 0.0;  // some side has a coreference link
    const bool non_defined = rn + wn + wc > 0.0;    // some side has a non-coreference link
    const Prf c = make_prf(ratio(rc, rc + wc), ratio(rc, rc + wn));
    const Prf n = make_prf(ratio(rn, rn + wn), ratio(rn, rn + wc));
    if (rc + wc + wn + rn == 0.0) return {};
    if (!coref_defined) return n;
    if (!non_defined) return c;
    return {(c.precision + n.precision) / 2.0, (c.recall + n.recall) / 2.0, (c.f1 + n.f1) / 2.0};
  }
};

namespace detail {

inline std::unordered_map<std::string, std::size_t> membership(const Partition& p) {
  std::unordered_map<std::string, std::size_t> out;
  for (std::size_t c = 0; c < p.size(); ++c) {
    for (const auto& m : p[c]) {
      if (!out.emplace(m, c).second) throw InputError("mention '" + m + "' appears in two clusters");
    }
  }
  return out;
}

inline void check_universe(const Partition& gold, const Partition& sys) {
  const auto g = membership(gold);
  const auto s = membership(sys);
  if (g.size() != s.size()) throw InputError("gold and system partitions cover different mentions");
  for (const auto& [m, c] : g) {
    if (!s.count(m)) throw InputError("mention '" + m + "' missing from the system partition");
  }
}

// sum over clusters K of key of (|K| - number of parts of K in other).
inline std::pair<double, double> muc_side(const Partition& key, const Partition& other) {
  const auto where = membership(other);
  double num = 0.0, den = 0.0;
  for (const auto& k : key) {
    std::set<std::size_t> parts;
    for (const auto& m : k) parts.insert(where.at(m));
    num += static_cast<double>(k.size() - parts.size());
    den += static_cast<double>(k.size()) - 1.0;
  }
  return {num, den};
}

inline double b3_side(const Partition& key, const Partition& other) {
  const auto where = membership(other);
  double num = 0.0;
  for (const auto& k : key) {
    std::map<std::size_t, double> overlap;
    for (const auto& m : k) overlap[where.at(m)] += 1.0;
    for (const auto& [c, n] : overlap) num += n * n / static_cast<double>(k.size());
  }
  return num;
}

}  // namespace detail

inline MetricCounts muc_counts(const Partition& gold, const Partition& sys) {
  detail::check_universe(gold, sys);
  const auto [rn, rd] = detail::muc_side(gold, sys);
  const auto [pn, pd] = detail::muc_side(sys, gold);
  return {rn, rd, pn, pd};
}

inline MetricCounts b_cubed_counts(const Partition& gold, const Partition& sys) {
  detail::check_universe(gold, sys);
  const double n = static_cast<double>(detail::membership(gold).size());
  return {detail::b3_side(gold, sys), n, detail::b3_side(sys, gold), n};
}

inline double phi4(const std::vector<std::string>& k, const std::vector<std::string>& r) {
  const std::set<std::string> ks(k.begin(), k.end());
  double common = 0.0;
  for (const auto& m : r) common += ks.count(m) ? 1.0 : 0.0;
  return 2.0 * common / static_cast<double>(k.size() + r.size());
}

inline MetricCounts ceaf_e_counts(const Partition& gold, const Partition& sys) {
  detail::check_universe(gold, sys);
  Eigen::MatrixXd cost(static_cast<Eigen::Index>(gold.size()), static_cast<Eigen::Index>(sys.size()));
  for (std::size_t i = 0; i < gold.size(); ++i) {
    for (std::size_t j = 0; j < sys.size(); ++j) {
      cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = -phi4(gold[i], sys[j]);
    }
  }
  const auto match = min_cost_assignment(cost);
  double total = 0.0;
  for (std::size_t i = 0; i < match.size(); ++i) {
    if (match[i] >= 0) total += phi4(gold[i], sys[static_cast<std::size_t>(match[i])]);
  }
  return {total, static_cast<double>(gold.size()), total, static_cast<double>(sys.size())};
}

inline BlancCounts blanc_counts(const Partition& gold, const Partition& sys) {
  detail::check_universe(gold, sys);
  const auto g = detail::membership(gold);
  const auto s = detail::membership(sys);
  std::vector<std::string> ids;
  for (const auto& c : gold) ids.insert(ids.end(), c.begin(), c.end());
  BlancCounts b;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::size_t j = i + 1; j < ids.size(); ++j) {
      const bool in_gold = g.at(ids[i]) == g.at(ids[j]);
      const bool in_sys = s.at(ids[i]) == s.at(ids[j]);
      if (in_gold && in_sys) b.rc += 1;
      else if (in_sys) b.wc += 1;
      else if (in_gold) b.wn += 1;
      else b.rn += 1;
    }
  }
  return b;
}

inline Prf muc(const Partition& gold, const Partition& sys) { return muc_counts(gold, sys).score(); }
inline Prf b_cubed(const Partition& gold, const Partition& sys) { return b_cubed_counts(gold, sys).score(); }
inline Prf ceaf_e(const Partition& gold, const Partition& sys) { return ceaf_e_counts(gold, sys).score(); }
inline Prf blanc(const Partition& gold, const Partition& sys) { return blanc_counts(gold, sys).score(); }

// ---------------------------------------------------------------------------
// Pairwise classification.

struct PairCounts {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;

  std::size_t support() const { return tp + fp + fn + tn; }
  Prf score() const {
    return make_prf(ratio(static_cast<double>(tp), static_cast<double>(tp + fp)),
                    ratio(static_cast<double>(tp), static_cast<double>(tp + fn)));
  }
};

inline constexpr double kDecisionThreshold = 0.5;

inline std::map<std::string, PairCounts> pair_report(const std::vector<double>& probs, const std::vector<bool>& labels,
                                                     const std::vector<ArgState>& states,
                                                     double threshold = kDecisionThreshold) {
  if (probs.size() != labels.size() || probs.size() != states.size()) {
    throw InputError("pair_report: predictions, labels and argument states differ in length");
  }
  std::map<std::string, PairCounts> out;
  out["ALL"];
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const bool pred = probs[i] >= threshold;
    for (PairCounts* c : {&out["ALL"], &out[to_string(states[i])]}) {
      if (pred && labels[i]) ++c->tp;
      else if (pred) ++c->fp;
      else if (labels[i]) ++c->fn;
      else ++c->tn;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Corpus-level report.

struct MetricReport {
  Prf muc, b_cubed, ceaf_e, blanc;
  double avg_f1 = 0.0;
  std::map<std::string, PairCounts> pairs;  // empty when no pair predictions were supplied
};

inline std::map<std::string, const Partition*> by_document(const std::vector<DocumentClusters>& docs) {
  std::map<std::string, const Partition*> out;
  for (const auto& d : docs) {
    if (!out.emplace(d.doc_id, &d.clusters).second) throw InputError("duplicate document '" + d.doc_id + "'");
  }
  return out;
}

inline MetricReport score_partitions(const std::vector<DocumentClusters>& gold,
                                     const std::vector<DocumentClusters>& sys) {
  const auto g = by_document(gold);
  const auto s = by_document(sys);
  if (g.size() != s.size()) throw InputError("gold and system cover different documents");
  MetricCounts m, b, c;
  BlancCounts bl;
  for (const auto& [id, gp] : g) {
    auto it = s.find(id);
    if (it == s.end()) throw InputError("document '" + id + "' missing from the system clusters");
    try {
      m += muc_counts(*gp, *it->second);
      b += b_cubed_counts(*gp, *it->second);
      c += ceaf_e_counts(*gp, *it->second);
      bl += blanc_counts(*gp, *it->second);
    } catch (const InputError& e) {
      throw InputError("document '" + id + "': " + e.what());
    }
  }
  MetricReport r;
  r.muc = m.score();
  r.b_cubed = b.score();
  r.ceaf_e = c.score();
  r.blanc = bl.score();
  r.avg_f1 = (r.muc.f1 + r.b_cubed.f1 + r.ceaf_e.f1 + r.blanc.f1) / 4.0;
  return r;
}

inline MetricReport make_report(const std::vector<DocumentClusters>& gold, const std::vector<DocumentClusters>& sys,
                                const std::vector<double>& probs, const std::vector<bool>& labels,
                                const std::vector<ArgState>& states) {
  MetricReport r = score_partitions(gold, sys);
  r.pairs = pair_report(probs, labels, states);
  return r;
}

inline std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

inline std::string format_score_table(const MetricReport& r) {
  std::ostringstream out;
  const auto row = [&](const std::string& name, double muc, double b3, double ceaf, double blanc,
                       const std::string& avg) {
    out << std::left << std::setw(4) << name << std::right;
    for (double v : {muc, b3, ceaf, blanc}) out << std::setw(9) << fixed3(v);
    out << std::setw(9) << avg << '\n';
  };
  out << std::left << std::setw(4) << "" << std::right << std::setw(9) << "MUC" << std::setw(9) << "B3"
      << std::setw(9) << "CEAF_e" << std::setw(9) << "BLANC" << std::setw(9) << "AVG" << '\n';
  row("P", r.muc.precision, r.b_cubed.precision, r.ceaf_e.precision, r.blanc.precision, "-");
  row("R", r.muc.recall, r.b_cubed.recall, r.ceaf_e.recall, r.blanc.recall, "-");
  row("F1", r.muc.f1, r.b_cubed.f1, r.ceaf_e.f1, r.blanc.f1, fixed3(r.avg_f1));
  if (!r.pairs.empty()) {
    out << '\n' << std::left << std::setw(7) << "pairs" << std::right << std::setw(9) << "P" << std::setw(9) << "R"
        << std::setw(9) << "F1" << std::setw(9) << "support" << '\n';
    for (const char* k : {"ALL", "NoA", "OneA", "BothA"}) {
      auto it = r.pairs.find(k);
      if (it == r.pairs.end()) continue;
      const Prf s = it->second.score();
      out << std::left << std::setw(7) << k << std::right << std::setw(9) << fixed3(s.precision) << std::setw(9)
          << fixed3(s.recall) << std::setw(9) << fixed3(s.f1) << std::setw(9) << it->second.support() << '\n';
    }
  }
  return out.str();
}

inline nlohmann::json to_json(const Prf& p) { return {{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}}; }

inline nlohmann::json to_json(const MetricReport& r) {
  nlohmann::json j = {{"MUC", to_json(r.muc)}, {"B3", to_json(r.b_cubed)}, {"CEAF_e", to_json(r.ceaf_e)},
                      {"BLANC", to_json(r.blanc)}, {"AVG", r.avg_f1}};
  if (!r.pairs.empty()) {
    nlohmann::json pairs = nlohmann::json::object();
    for (const auto& [k, c] : r.pairs) {
      auto s = to_json(c.score());
      s["tp"] = c.tp;
      s["fp"] = c.fp;
      s["fn"] = c.fn;
      s["tn"] = c.tn;
      pairs[k] = s;
    }
    j["pairs"] = pairs;
  }
  return j;
}

}  // namespace ecr
