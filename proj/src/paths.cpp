#include "presem/paths.hpp"

#include <algorithm>
#include <map>

namespace presem::paths {

using substrate::Polarity;

namespace {

using Adjacency = std::vector<std::vector<const Synapse*>>;

// Outgoing edges per neuron, in key order.
Adjacency outgoing(const NeuronGraph& graph) {
  Adjacency adj(graph.size());
  for (const auto& [key, syn] : graph.synapses()) adj[key.source.value].push_back(&syn);
  return adj;
}

struct Walker {
  const Adjacency& adj;
  const NeuronSet& src;
  const NeuronSet& dst;
  std::size_t max_len;
  std::vector<bool> on_path;
  std::vector<const Synapse*> stack;
  std::vector<Path>* out;

  void emit() {
    Path p;
    for (const Synapse* s : stack) {
      p.edges.push_back(*s);
      p.strength *= s->weight;
    }
    p.sign = substrate::sign_of(stack.back()->polarity);
    out->push_back(std::move(p));
  }

  void extend(NeuronId at) {
    if (stack.size() >= max_len) return;
    for (const Synapse* s : adj[at.value]) {
      const NeuronId next = s->target;
      if (on_path[next.value] || src.contains(next)) continue;
      if (dst.contains(next)) {
        stack.push_back(s);
        emit();
        stack.pop_back();
        continue;
      }
      if (s->polarity == Polarity::inhibitory) continue;
      if (stack.size() + 1 >= max_len) continue;
      stack.push_back(s);
      on_path[next.value] = true;
      extend(next);
      on_path[next.value] = false;
      stack.pop_back();
    }
  }
};

void check_endpoints(const NeuronGraph& graph, const NeuronSet& src, const NeuronSet& dst) {
  if (src.empty() || dst.empty()) throw Error(Errc::usage, "path endpoints must be non-empty");
  for (NeuronId n : src) {
    if (!graph.contains(n)) throw Error(Errc::usage, "source neuron outside the graph");
    if (dst.contains(n)) throw Error(Errc::usage, "source and destination groups overlap");
  }
  for (NeuronId n : dst) {
    if (!graph.contains(n)) throw Error(Errc::usage, "destination neuron outside the graph");
  }
}

}  // namespace

std::vector<Path> enumerate_paths(const NeuronGraph& graph, const NeuronSet& src,
                                  const NeuronSet& dst, std::size_t max_len) {
  if (max_len == 0) throw Error(Errc::usage, "max_len must be at least 1");
  check_endpoints(graph, src, dst);

  const Adjacency adj = outgoing(graph);
  std::vector<Path> out;
  Walker walker{adj, src, dst, max_len, std::vector<bool>(graph.size(), false), {}, &out};
  for (NeuronId s : src) {
    walker.on_path[s.value] = true;
    walker.extend(s);
    walker.on_path[s.value] = false;
  }

  std::sort(out.begin(), out.end(), [](const Path& a, const Path& b) {
    if (a.length() != b.length()) return a.length() < b.length();
    return std::lexicographical_compare(
        a.edges.begin(), a.edges.end(), b.edges.begin(), b.edges.end(),
        [](const Synapse& x, const Synapse& y) { return x.key() < y.key(); });
  });
  return out;
}

SignalReport effective_signal(const NeuronGraph& graph, const NeuronSet& src,
                              const NeuronSet& dst, std::size_t max_len) {
  SignalReport report;
  const double scale = 1.0 / static_cast<double>(src.empty() ? 1 : src.size());
  for (const auto& p : enumerate_paths(graph, src, dst, max_len)) {
    const double contribution = p.sign * p.strength * scale;
    (p.length() == 1 ? report.direct : report.indirect) += contribution;
    (p.sign > 0 ? report.positive_paths : report.negative_paths) += 1;
  }
  report.total = report.direct + report.indirect;
  return report;
}

const char* to_string(Equivalence e) {
  switch (e) {
    case Equivalence::agree: return "agree";
    case Equivalence::disagree: return "disagree";
    case Equivalence::out_of_class: return "out-of-class";
  }
  return "out-of-class";
}

bool in_equivalence_class(const NeuronGraph& graph) {
  const Adjacency adj = outgoing(graph);
  for (const auto& [key, syn] : graph.synapses()) {
    if (syn.weight != 1.0) return false;
    if (syn.polarity == Polarity::inhibitory && !adj[key.target.value].empty()) return false;
  }
  // Kahn's algorithm; leftover in-degree means a cycle.
  std::vector<std::size_t> indegree(graph.size(), 0);
  for (const auto& [key, syn] : graph.synapses()) ++indegree[key.target.value];
  std::vector<std::uint32_t> ready;
  for (std::uint32_t i = 0; i < graph.size(); ++i) {
    if (indegree[i] == 0) ready.push_back(i);
  }
  std::size_t visited = 0;
  while (!ready.empty()) {
    const std::uint32_t n = ready.back();
    ready.pop_back();
    ++visited;
    for (const Synapse* s : adj[n]) {
      if (--indegree[s->target.value] == 0) ready.push_back(s->target.value);
    }
  }
  return visited == graph.size();
}

EquivalenceResult steady_state_equivalence_check(const NeuronGraph& graph,
                                                 const NeuronSet& src, const NeuronSet& dst) {
  EquivalenceResult result;
  if (!in_equivalence_class(graph)) return result;

  const std::size_t longest = std::max<std::size_t>(graph.size(), 1);
  result.static_fires =
      effective_signal(graph, src, dst, longest).total >= graph.theta() - substrate::kFiringTolerance;

  // An acyclic graph with clamped sources settles within its depth.
  const auto trace = substrate::run(graph, src, {}, graph.size() + 2);
  const std::vector<NeuronId> dst_members(dst.begin(), dst.end());
  result.dynamic_fires = trace.status == substrate::TraceStatus::fixpoint &&
                         substrate::group_active(trace.final_firing(), dst_members);

  result.outcome =
      result.static_fires == result.dynamic_fires ? Equivalence::agree : Equivalence::disagree;
  return result;
}

}  // namespace presem::paths
