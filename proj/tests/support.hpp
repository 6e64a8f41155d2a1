#pragma once

// Shared generators and brute-force oracles for the unit, property and
// acceptance tests. The oracles deliberately avoid the library's own helpers
// (adjacency matrices and exhaustive sequence search instead of the map-based
// graph and DFS walker) so agreement means something.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "presem/dsl.hpp"
#include "presem/paths.hpp"
#include "presem/pictures.hpp"
#include "presem/substrate.hpp"

namespace presem::testing {

using substrate::NeuronGraph;
using substrate::NeuronId;
using substrate::NeuronSet;
using substrate::Polarity;
using substrate::Synapse;

inline NeuronId nid(std::uint32_t v) { return NeuronId{v}; }

inline NeuronSet ids(std::initializer_list<std::uint32_t> vs) {
  NeuronSet out;
  for (auto v : vs) out.insert(nid(v));
  return out;
}

// n unconnected neurons, each its own group "n0".."n{k}".
inline NeuronGraph bare_graph(std::size_t n, double theta = 1.0) {
  NeuronGraph g(theta);
  for (std::size_t i = 0; i < n; ++i) {
    const auto id = g.add_neuron("n" + std::to_string(i));
    g.add_group("n" + std::to_string(i), {id});
  }
  return g;
}

inline void wire(NeuronGraph& g, std::uint32_t a, std::uint32_t b, double w,
                 Polarity p = Polarity::excitatory) {
  g.add_synapse({nid(a), nid(b), p, w, substrate::EdgeKind::association});
}

// The amplifier: N1 -> N2 -> N4, N1 -> N3 -> N4, N1 -| N4, unit weights.
// Neuron ids 0..3 stand for N1..N4.
inline NeuronGraph amplifier() {
  auto g = bare_graph(4);
  wire(g, 0, 1, 1);
  wire(g, 0, 2, 1);
  wire(g, 1, 3, 1);
  wire(g, 2, 3, 1);
  wire(g, 0, 3, 1, Polarity::inhibitory);
  return g;
}

struct RandomGraphOptions {
  std::size_t min_neurons = 1;
  std::size_t max_neurons = 8;
  double edge_probability = 0.3;
  double inhibitory_probability = 0.3;
  bool self_loops = true;
};

inline NeuronGraph random_graph(std::mt19937& rng, const RandomGraphOptions& opt = {}) {
  std::uniform_int_distribution<std::size_t> size(opt.min_neurons, opt.max_neurons);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  static constexpr double kWeights[] = {0.25, 0.5, 1.0, 1.5, 2.0};
  std::uniform_int_distribution<std::size_t> pick(0, std::size(kWeights) - 1);

  const std::size_t n = size(rng);
  auto g = bare_graph(n);
  for (std::uint32_t a = 0; a < n; ++a) {
    for (std::uint32_t b = 0; b < n; ++b) {
      if (a == b && !opt.self_loops) continue;
      if (coin(rng) < opt.edge_probability) wire(g, a, b, kWeights[pick(rng)]);
      if (coin(rng) < opt.edge_probability * opt.inhibitory_probability) {
        wire(g, a, b, kWeights[pick(rng)], Polarity::inhibitory);
      }
    }
  }
  return g;
}

inline NeuronSet random_subset(std::mt19937& rng, std::size_t n, double p = 0.4) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  NeuronSet out;
  for (std::uint32_t i = 0; i < n; ++i) {
    if (coin(rng) < p) out.insert(nid(i));
  }
  return out;
}

// Dense signed weight matrix: W[a][b] = excitatory - inhibitory weight.
inline std::vector<std::vector<double>> net_matrix(const NeuronGraph& g) {
  std::vector<std::vector<double>> w(g.size(), std::vector<double>(g.size(), 0.0));
  for (const auto& [key, s] : g.synapses()) {
    w[s.source.value][s.target.value] += substrate::sign_of(s.polarity) * s.weight;
  }
  return w;
}

// Firing rule evaluated straight from the matrix, without attention.
inline NeuronSet oracle_step(const NeuronGraph& g, const NeuronSet& firing, const NeuronSet& clamps) {
  const auto w = net_matrix(g);
  NeuronSet next = clamps;
  for (std::size_t b = 0; b < g.size(); ++b) {
    double net = 0.0;
    for (auto a : firing) net += w[a.value][b];
    if (net >= g.theta() - 1e-9) next.insert(nid(static_cast<std::uint32_t>(b)));
  }
  return next;
}

// A path as a node sequence plus the polarity of its final hop.
struct NodePath {
  std::vector<std::uint32_t> nodes;
  Polarity last = Polarity::excitatory;
  double strength = 1.0;
  auto operator<=>(const NodePath&) const = default;
};

// Every admissible path found by trying all node sequences up to max_len
// edges: simple, starts in src, ends at its first dst node, never re-enters
// src, only the last hop may be inhibitory.
inline std::vector<NodePath> oracle_paths(const NeuronGraph& g, const NeuronSet& src,
                                          const NeuronSet& dst, std::size_t max_len) {
  std::vector<NodePath> out;
  std::vector<std::uint32_t> seq;
  const auto n = static_cast<std::uint32_t>(g.size());
  std::function<void()> grow = [&]() {
    const std::size_t hops = seq.size() - 1;
    if (hops >= 1 && dst.contains(nid(seq.back()))) {
      // Close the sequence with every admissible polarity combination.
      std::vector<std::vector<std::pair<Polarity, double>>> options(hops);
      for (std::size_t i = 0; i < hops; ++i) {
        for (auto p : {Polarity::excitatory, Polarity::inhibitory}) {
          if (p == Polarity::inhibitory && i + 1 != hops) continue;
          if (const auto* s = g.find({nid(seq[i]), nid(seq[i + 1]), p})) options[i].push_back({p, s->weight});
        }
      }
      std::function<void(std::size_t, double, Polarity)> expand = [&](std::size_t i, double strength, Polarity last) {
        if (i == hops) {
          out.push_back({seq, last, strength});
          return;
        }
        for (auto [p, w] : options[i]) expand(i + 1, strength * w, p);
      };
      expand(0, 1.0, Polarity::excitatory);
      return;
    }
    if (hops == max_len) return;
    for (std::uint32_t next = 0; next < n; ++next) {
      if (std::find(seq.begin(), seq.end(), next) != seq.end()) continue;
      if (src.contains(nid(next))) continue;
      seq.push_back(next);
      grow();
      seq.pop_back();
    }
  };
  for (auto s : src) {
    seq = {s.value};
    grow();
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline NodePath as_node_path(const paths::Path& p) {
  NodePath out;
  out.nodes.push_back(p.edges.front().source.value);
  for (const auto& e : p.edges) out.nodes.push_back(e.target.value);
  out.last = p.edges.back().polarity;
  out.strength = p.strength;
  return out;
}

// In-class graphs for the static/dynamic comparison, reduced to the part that
// can matter: nodes 0..m-1 in topological order, source 0, destination m-1,
// excitatory edges only forward, inhibition only into the destination, and
// every node on some route from source to destination. Anything off those
// routes neither carries a path nor ever fires, so it cannot change either
// side of the comparison; `reduce` below makes that claim testable.
template <class Visit>
std::size_t for_each_reduced_graph(std::size_t m, Visit&& visit) {
  const std::uint32_t last = static_cast<std::uint32_t>(m - 1);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> inner;  // excitatory only
  for (std::uint32_t i = 0; i < last; ++i) {
    for (std::uint32_t j = i + 1; j < last; ++j) inner.emplace_back(i, j);
  }
  const std::size_t inner_count = inner.size();
  const std::size_t into_dst = m - 1;  // each: none, +, -, both
  std::size_t visited = 0;
  for (std::uint64_t a = 0; a < (std::uint64_t{1} << inner_count); ++a) {
    for (std::uint64_t b = 0; b < (std::uint64_t{1} << (2 * into_dst)); ++b) {
      std::vector<std::vector<std::uint32_t>> out(m);
      for (std::size_t e = 0; e < inner_count; ++e) {
        if (a >> e & 1) out[inner[e].first].push_back(inner[e].second);
      }
      for (std::uint32_t i = 0; i < last; ++i) {
        if (b >> (2 * i) & 3) out[i].push_back(last);
      }
      // Forward reachability from 0 and backward from m-1.
      std::vector<bool> reach(m, false);
      std::vector<bool> ancestor(m, false);
      reach[0] = true;
      for (std::uint32_t i = 0; i < m; ++i) {
        if (!reach[i]) continue;
        for (auto j : out[i]) reach[j] = true;
      }
      ancestor[last] = true;
      for (std::uint32_t i = m; i-- > 0;) {
        for (auto j : out[i]) {
          if (ancestor[j]) ancestor[i] = true;
        }
      }
      if (!std::all_of(reach.begin(), reach.end(), [](bool x) { return x; }) ||
          !std::all_of(ancestor.begin(), ancestor.end(), [](bool x) { return x; })) {
        continue;
      }
      auto g = bare_graph(m);
      for (std::size_t e = 0; e < inner_count; ++e) {
        if (a >> e & 1) wire(g, inner[e].first, inner[e].second, 1.0);
      }
      for (std::uint32_t i = 0; i < last; ++i) {
        const auto bits = b >> (2 * i) & 3;
        if (bits & 1) wire(g, i, last, 1.0);
        if (bits & 2) wire(g, i, last, 1.0, Polarity::inhibitory);
      }
      ++visited;
      visit(g);
    }
  }
  return visited;
}

// Every acyclic graph on n nodes with forward edges i<j, each pair absent,
// excitatory or inhibitory, kept only when it lies in the comparison class.
template <class Visit>
std::size_t for_each_labeled_class_graph(std::size_t n, Visit&& visit) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  }
  std::size_t total = 1;
  for (std::size_t i = 0; i < pairs.size(); ++i) total *= 3;
  std::size_t visited = 0;
  for (std::size_t code = 0; code < total; ++code) {
    auto g = bare_graph(n);
    std::size_t c = code;
    for (const auto& [i, j] : pairs) {
      const auto state = c % 3;
      c /= 3;
      if (state == 1) wire(g, i, j, 1.0);
      if (state == 2) wire(g, i, j, 1.0, Polarity::inhibitory);
    }
    if (!paths::in_equivalence_class(g)) continue;
    ++visited;
    visit(g);
  }
  return visited;
}

// The reduced form of (g, src, dst): nodes reachable from src that are also
// ancestors of dst, relabeled in id order with src first and dst last.
// Returns nullopt when dst is not reachable at all.
inline std::optional<NeuronGraph> reduce(const NeuronGraph& g, NeuronId src, NeuronId dst) {
  const std::size_t n = g.size();
  std::vector<bool> reach(n, false);
  std::vector<bool> ancestor(n, false);
  reach[src.value] = true;
  ancestor[dst.value] = true;
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& [key, s] : g.synapses()) {
      if (reach[s.source.value] && s.source != dst && !reach[s.target.value]) {
        reach[s.target.value] = changed = true;
      }
      if (ancestor[s.target.value] && s.target != src && !ancestor[s.source.value]) {
        ancestor[s.source.value] = changed = true;
      }
    }
  }
  if (!reach[dst.value]) return std::nullopt;
  std::vector<std::uint32_t> keep = {src.value};
  for (std::uint32_t i = 0; i < n; ++i) {
    if (i != src.value && i != dst.value && reach[i] && ancestor[i]) keep.push_back(i);
  }
  keep.push_back(dst.value);
  std::map<std::uint32_t, std::uint32_t> index;
  for (std::uint32_t k = 0; k < keep.size(); ++k) index[keep[k]] = k;
  auto out = bare_graph(keep.size(), g.theta());
  for (const auto& [key, s] : g.synapses()) {
    if (!index.contains(s.source.value) || !index.contains(s.target.value)) continue;
    if (s.target == src || s.source == dst) continue;
    wire(out, index[s.source.value], index[s.target.value], s.weight, s.polarity);
  }
  return out;
}

// Random feature-tagged picture over a fresh graph: `parts` leaves of 1..3
// neurons each, a random subset of sibling pairs joined by mutual inhibition.
struct RandomPicture {
  NeuronGraph graph;
  pictures::Picture picture;
};

inline RandomPicture random_picture(std::mt19937& rng, std::size_t max_parts = 5) {
  std::uniform_int_distribution<std::size_t> parts_dist(2, max_parts);
  std::uniform_int_distribution<std::size_t> size_dist(1, 3);
  std::uniform_real_distribution<double> coin(0.0, 1.0);

  RandomPicture out;
  std::vector<pictures::Picture> leaves;
  const std::size_t k = parts_dist(rng);
  for (std::size_t i = 0; i < k; ++i) {
    NeuronSet members;
    const std::string name = "part" + std::to_string(i);
    std::vector<NeuronId> ids;
    for (std::size_t j = size_dist(rng); j > 0; --j) ids.push_back(out.graph.add_neuron(name));
    out.graph.add_group(name, ids);
    members.insert(ids.begin(), ids.end());
    std::map<pictures::Feature, NeuronSet> tags;
    if (coin(rng) < 0.7) {
      tags[{"f" + std::to_string(i % 3), coin(rng) < 0.5 ? pictures::Stance::asserted
                                                          : pictures::Stance::denied}] = members;
    }
    leaves.push_back(pictures::make_leaf(name, members, std::move(tags)));
  }
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      if (coin(rng) >= 0.4) continue;
      for (auto a : leaves[i].members) {
        for (auto b : leaves[j].members) {
          out.graph.add_synapse({a, b, Polarity::inhibitory, 1.0, substrate::EdgeKind::association});
          out.graph.add_synapse({b, a, Polarity::inhibitory, 1.0, substrate::EdgeKind::association});
        }
      }
    }
  }
  out.picture = pictures::make_whole("whole", std::move(leaves));
  return out;
}

// Random but valid scenario document, used for round-trip checks.
inline dsl::ScenarioDocument random_document(std::mt19937& rng) {
  using pictures::Feature;
  using pictures::Stance;
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  auto upto = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  static const char* kNames[] = {"rain", "dry", "wind", "pole", "rope", "tree", "cheese", "x_1", "a-b"};

  dsl::ScenarioDocument doc;
  doc.name = coin(rng) < 0.2 ? "" : "doc \"" + std::to_string(upto(0, 999)) + "\"";
  const std::size_t groups = upto(1, 6);
  std::vector<Feature> tags;
  for (std::size_t i = 0; i < groups; ++i) {
    dsl::GroupDecl g;
    g.id = "g" + std::to_string(i);
    g.size = upto(1, 4);
    if (coin(rng) < 0.8) {
      Feature f{kNames[upto(0, std::size(kNames) - 1)], coin(rng) < 0.5 ? Stance::asserted : Stance::denied};
      g.features.push_back(f);
      tags.push_back(f);
    }
    doc.groups.push_back(g);
  }
  for (std::size_t i = upto(0, 6); i > 0; --i) {
    dsl::LinkDecl l;
    l.from = doc.groups[upto(0, groups - 1)].id;
    l.to = doc.groups[upto(0, groups - 1)].id;
    l.polarity = coin(rng) < 0.7 ? Polarity::excitatory : Polarity::inhibitory;
    static constexpr double kWeights[] = {0, 0.1, 0.5, 1, 2, 1e-7, 12.75};
    l.weight = kWeights[upto(0, std::size(kWeights) - 1)];
    l.kind = static_cast<substrate::EdgeKind>(upto(0, 4));
    doc.links.push_back(l);
  }
  const std::size_t pics = upto(0, 3);
  for (std::size_t i = 0; i < pics; ++i) {
    dsl::PictureDecl p;
    p.id = "p" + std::to_string(i);
    for (std::size_t j = upto(1, 3); j > 0; --j) {
      // Only earlier pictures may be parts, which keeps the parts graph acyclic.
      if (i > 0 && coin(rng) < 0.3) {
        p.parts.push_back("p" + std::to_string(upto(0, i - 1)));
      } else {
        p.parts.push_back(doc.groups[upto(0, groups - 1)].id);
      }
    }
    if (coin(rng) < 0.3) p.features.push_back({"extra", Stance::asserted});
    doc.pictures.push_back(p);
  }
  // Situations use whole group tag sets so every feature is realizable.
  for (std::size_t i = upto(0, 2); i > 0; --i) {
    dsl::SituationDecl s;
    s.case_id = coin(rng) < 0.5 ? std::to_string(i) : "c" + std::to_string(i);
    for (const auto& g : doc.groups) {
      if (!g.features.empty() && coin(rng) < 0.4) {
        s.features.insert(s.features.end(), g.features.begin(), g.features.end());
      }
    }
    if (std::none_of(doc.situations.begin(), doc.situations.end(),
                     [&](const auto& o) { return o.case_id == s.case_id; })) {
      doc.situations.push_back(s);
    }
  }
  if (!tags.empty()) {
    std::vector<Feature> goal_tags = tags;
    std::sort(goal_tags.begin(), goal_tags.end());
    goal_tags.erase(std::unique(goal_tags.begin(), goal_tags.end()), goal_tags.end());
    for (const auto& f : goal_tags) {
      if (coin(rng) < 0.5) doc.goals.push_back({f, static_cast<double>(upto(0, 8)) / 4.0});
    }
    if (coin(rng) < 0.8) {
      dsl::QueryDecl q;
      q.antecedent.push_back(tags[upto(0, tags.size() - 1)]);
      q.consequent.push_back(tags[upto(0, tags.size() - 1)]);
      if (coin(rng) < 0.5) q.consequent.push_back(tags[upto(0, tags.size() - 1)].negated());
      doc.query = q;
    }
  }
  if (coin(rng) < 0.3) {
    dsl::AttentionDecl a;
    a.focus.push_back(doc.groups[upto(0, groups - 1)].id);
    a.off_gain = coin(rng) < 0.5 ? 0.0 : 0.25;
    doc.attention = a;
  }
  for (const auto& p : doc.pictures) {
    if (coin(rng) < 0.3) doc.cuts.push_back({p.id, p.parts.front()});
  }
  return doc;
}

}  // namespace presem::testing
