#pragma once

// Greedy clustering of a document's mentions from pairwise coreference
// probabilities.

#include <algorithm>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "ecr/corpus.hpp"
#include "ecr/errors.hpp"

namespace ecr {

enum class ClusterMode {
  UnionMerge,     // union every pair at or above theta, highest probability first
  BestAntecedent  // left to right, link each mention to its most probable earlier mention at or above theta
};

inline const char* to_string(ClusterMode m) { return m == ClusterMode::UnionMerge ? "union" : "antecedent"; }

inline ClusterMode parse_cluster_mode(const std::string& name) {
  if (name == "union") return ClusterMode::UnionMerge;
  if (name == "antecedent") return ClusterMode::BestAntecedent;
  throw ConfigError("unknown clustering mode '" + name + "' (expected union|antecedent)");
}

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n), size_(n, 1) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    return true;
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> size_;
};

struct ScoredPair {
  std::string first;
  std::string second;
  double probability = 0.0;
};

// `mentions` are in document order; the returned clusters list members in
// that order, clusters ordered by their first member.
inline Partition greedy_cluster(const std::vector<std::string>& mentions, const std::vector<ScoredPair>& pairs,
                                double theta = 0.5, ClusterMode mode = ClusterMode::UnionMerge) {
  std::map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < mentions.size(); ++i) {
    if (!pos.emplace(mentions[i], i).second) throw ArgumentError("greedy_cluster: duplicate mention '" + mentions[i] + "'");
  }
  struct Edge {
    std::size_t a, b;
    double p;
  };
  std::vector<Edge> edges;
  edges.reserve(pairs.size());
  for (const auto& sp : pairs) {
    if (!(sp.probability >= 0.0 && sp.probability <= 1.0)) {
      throw ArgumentError("greedy_cluster: probability outside [0, 1] for " + sp.first + "-" + sp.second);
    }
    auto ia = pos.find(sp.first);
    auto ib = pos.find(sp.second);
    if (ia == pos.end() || ib == pos.end()) throw ArgumentError("greedy_cluster: pair names an unknown mention");
    edges.push_back({std::min(ia->second, ib->second), std::max(ia->second, ib->second), sp.probability});
  }
  std::stable_sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) {
    if (x.p != y.p) return x.p > y.p;
    return x.a != y.a ? x.a < y.a : x.b < y.b;
  });

  UnionFind uf(mentions.size());
  if (mode == ClusterMode::UnionMerge) {
    for (const auto& e : edges) {
      if (e.p < theta) break;
      uf.unite(e.a, e.b);
    }
  } else {
    // Sorted edges put each later mention's best antecedent first.
    std::vector<bool> linked(mentions.size(), false);
    for (const auto& e : edges) {
      if (e.p < theta) break;
      if (!linked[e.b]) {
        linked[e.b] = true;
        uf.unite(e.a, e.b);
      }
    }
  }

  std::map<std::size_t, std::size_t> cluster_of_root;
  Partition out;
  for (std::size_t i = 0; i < mentions.size(); ++i) {
    const std::size_t r = uf.find(i);
    auto [it, fresh] = cluster_of_root.emplace(r, out.size());
    if (fresh) out.emplace_back();
    out[it->second].push_back(mentions[i]);
  }
  return out;
}

// Clusters every document from pair probabilities aligned with `pairs`.
inline std::vector<DocumentClusters> cluster_documents(const std::vector<Document>& docs,
                                                       const std::vector<MentionPair>& pairs,
                                                       const std::vector<double>& probs, double theta = 0.5,
                                                       ClusterMode mode = ClusterMode::UnionMerge) {
  if (pairs.size() != probs.size()) throw ArgumentError("cluster_documents: pairs and probabilities differ in length");
  std::map<std::string, std::vector<ScoredPair>> by_doc;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    by_doc[pairs[i].doc_id].push_back({pairs[i].first, pairs[i].second, probs[i]});
  }
  std::vector<DocumentClusters> out;
  for (const auto& doc : docs) {
    std::vector<std::string> ids;
    for (std::size_t idx : doc.document_order()) ids.push_back(doc.mentions[idx].mention_id);
    out.push_back({doc.doc_id, greedy_cluster(ids, by_doc[doc.doc_id], theta, mode)});
  }
  return out;
}

}  // namespace ecr
