#pragma once

// Brute-force reference scorers for small partitions. They share no code with
// the metrics module and count things a different way on purpose.

#include <algorithm>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "ecr/corpus.hpp"
#include "ecr/metrics.hpp"
#include "ecr/random.hpp"

namespace ecr::testing {

struct OracleScore {
  double p = 0.0, r = 0.0, f = 0.0;
};

inline OracleScore oracle_prf(double p, double r) {
  return {p, r, (p + r) == 0.0 ? 0.0 : 2.0 * p * r / (p + r)};
}

inline int cluster_of(const Partition& part, const std::string& m) {
  for (std::size_t c = 0; c < part.size(); ++c) {
    if (std::find(part[c].begin(), part[c].end(), m) != part[c].end()) return static_cast<int>(c);
  }
  return -1;
}

// Links of `key` that survive in `other`: each key cluster is a graph whose
// edges are the pairs `other` also groups together; missing links are the
// extra connected components found by flood fill.
inline std::pair<double, double> oracle_muc_side(const Partition& key, const Partition& other) {
  double num = 0.0, den = 0.0;
  for (const auto& k : key) {
    std::vector<int> comp(k.size(), -1);
    int comps = 0;
    for (std::size_t s = 0; s < k.size(); ++s) {
      if (comp[s] >= 0) continue;
      std::vector<std::size_t> stack{s};
      comp[s] = comps;
      while (!stack.empty()) {
        const std::size_t u = stack.back();
        stack.pop_back();
        for (std::size_t v = 0; v < k.size(); ++v) {
          if (comp[v] < 0 && cluster_of(other, k[u]) == cluster_of(other, k[v])) {
            comp[v] = comps;
            stack.push_back(v);
          }
        }
      }
      ++comps;
    }
    num += static_cast<double>(k.size()) - comps;
    den += static_cast<double>(k.size()) - 1.0;
  }
  return {num, den};
}

inline OracleScore oracle_muc(const Partition& gold, const Partition& sys) {
  const auto [rn, rd] = oracle_muc_side(gold, sys);
  const auto [pn, pd] = oracle_muc_side(sys, gold);
  return oracle_prf(pd == 0.0 ? 0.0 : pn / pd, rd == 0.0 ? 0.0 : rn / rd);
}

// Per-mention overlap of the two clusters containing it.
inline OracleScore oracle_b3(const Partition& gold, const Partition& sys) {
  double p = 0.0, r = 0.0, n = 0.0;
  for (const auto& k : gold) {
    for (const auto& m : k) {
      const auto& g = gold[static_cast<std::size_t>(cluster_of(gold, m))];
      const auto& s = sys[static_cast<std::size_t>(cluster_of(sys, m))];
      double both = 0.0;
      for (const auto& x : g) both += std::count(s.begin(), s.end(), x);
      p += both / static_cast<double>(s.size());
      r += both / static_cast<double>(g.size());
      n += 1.0;
    }
  }
  return oracle_prf(n == 0.0 ? 0.0 : p / n, n == 0.0 ? 0.0 : r / n);
}

// Best one-to-one alignment found by trying every permutation of the larger side.
inline OracleScore oracle_ceaf_e(const Partition& gold, const Partition& sys) {
  const auto phi = [](const std::vector<std::string>& a, const std::vector<std::string>& b) {
    double both = 0.0;
    for (const auto& x : a) both += std::count(b.begin(), b.end(), x);
    return 2.0 * both / static_cast<double>(a.size() + b.size());
  };
  const bool gold_small = gold.size() <= sys.size();
  const Partition& small = gold_small ? gold : sys;
  const Partition& large = gold_small ? sys : gold;
  std::vector<std::size_t> perm(large.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = 0.0;
  do {
    double total = 0.0;
    for (std::size_t i = 0; i < small.size(); ++i) total += phi(small[i], large[perm[i]]);
    best = std::max(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return oracle_prf(sys.empty() ? 0.0 : best / static_cast<double>(sys.size()),
                    gold.empty() ? 0.0 : best / static_cast<double>(gold.size()));
}

// Link counts from cluster sizes and the contingency table rather than pair enumeration.
inline OracleScore oracle_blanc(const Partition& gold, const Partition& sys) {
  const auto choose2 = [](double n) { return n * (n - 1.0) / 2.0; };
  double n = 0.0, gold_links = 0.0, sys_links = 0.0, rc = 0.0;
  for (const auto& k : gold) {
    n += static_cast<double>(k.size());
    gold_links += choose2(static_cast<double>(k.size()));
  }
  for (const auto& s : sys) {
    sys_links += choose2(static_cast<double>(s.size()));
    for (const auto& k : gold) {
      double both = 0.0;
      for (const auto& x : k) both += std::count(s.begin(), s.end(), x);
      rc += choose2(both);
    }
  }
  const double total = choose2(n);
  const double wc = sys_links - rc, wn = gold_links - rc;
  const double rn = total - rc - wc - wn;
  if (total == 0.0) return {};
  const auto div = [](double a, double b) { return b == 0.0 ? 0.0 : a / b; };
  const OracleScore c = oracle_prf(div(rc, sys_links), div(rc, gold_links));
  const OracleScore nc = oracle_prf(div(rn, rn + wn), div(rn, rn + wc));
  // Reference-scorer conventions: a link class absent from both sides is dropped.
  if (gold_links == 0.0 && sys_links == 0.0) return nc;
  if (gold_links == total && sys_links == total) return c;
  return {(c.p + nc.p) / 2.0, (c.r + nc.r) / 2.0, (c.f + nc.f) / 2.0};
}

// A random partition of mentions m0..m{n-1}, built from a random labelling.
inline Partition random_partition(Rng& rng, std::size_t n) {
  const std::size_t k = 1 + rng.index(n);
  std::map<std::size_t, std::vector<std::string>> groups;
  for (std::size_t i = 0; i < n; ++i) groups[rng.index(k)].push_back("m" + std::to_string(i));
  Partition out;
  for (auto& [g, ms] : groups) out.push_back(std::move(ms));
  rng.shuffle(out);
  return out;
}

inline Partition worked_gold() { return {{"a", "b", "c"}, {"d"}}; }
inline Partition worked_system() { return {{"a", "b"}, {"c", "d"}}; }

}  // namespace ecr::testing
