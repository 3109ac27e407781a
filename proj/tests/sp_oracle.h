#ifndef KGCOREF_TESTS_SP_ORACLE_H_
#define KGCOREF_TESTS_SP_ORACLE_H_

// Brute-force selectional preference extraction used as an independent
// reference: one pass for predicate totals, one pass for pair counts.

#include <cstdint>
#include <set>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "kgcoref/kg.h"
#include "kgcoref/rng.h"

namespace kgcoref::testing_oracle {

// (relation, predicate, argument, probability)
using SpKey = std::tuple<std::string, std::string, std::string, double>;

inline std::set<SpKey> Keys(const std::vector<Triplet>& triplets) {
  std::set<SpKey> out;
  for (const Triplet& t : triplets) {
    out.insert({t.relation, NormalizePhrase(t.tail), NormalizePhrase(t.head), t.confidence});
  }
  return out;
}

inline std::set<SpKey> BruteForceSp(const std::vector<DepEdge>& edges, double prob_threshold,
                                    int64_t count_threshold) {
  std::unordered_map<std::string, int64_t> totals;
  for (const DepEdge& e : edges) totals[DepRelationName(e.relation) + std::string("\t") + e.predicate] += e.count;
  std::unordered_map<std::string, int64_t> pairs;
  for (const DepEdge& e : edges) {
    pairs[DepRelationName(e.relation) + std::string("\t") + e.predicate + "\t" + e.argument] += e.count;
  }
  std::set<SpKey> out;
  for (const auto& [key, count] : pairs) {
    const size_t a = key.find('\t');
    const size_t b = key.find('\t', a + 1);
    const std::string rel = key.substr(0, a);
    const std::string pred = key.substr(a + 1, b - a - 1);
    const std::string arg = key.substr(b + 1);
    const double p = static_cast<double>(count) / static_cast<double>(totals.at(rel + "\t" + pred));
    if (p > prob_threshold && count > count_threshold) out.insert({rel, pred, arg, p});
  }
  return out;
}

// Skewed random stream: few predicates, Zipf-like arguments, counts 1..40,
// so that every threshold branch is exercised.
inline std::vector<DepEdge> RandomEdges(Rng& rng, int n) {
  std::vector<DepEdge> edges;
  edges.reserve(n);
  for (int i = 0; i < n; ++i) {
    DepEdge e;
    e.predicate = "p" + std::to_string(rng.Below(40));
    const double u = rng.Uniform();
    e.argument = "a" + std::to_string(static_cast<int>(60 * u * u * u));
    e.relation = rng.Bernoulli(0.5) ? DepRelation::kNsubj : DepRelation::kDobj;
    e.count = rng.Range(1, 40);
    edges.push_back(e);
  }
  return edges;
}

}  // namespace kgcoref::testing_oracle

#endif  // KGCOREF_TESTS_SP_ORACLE_H_
