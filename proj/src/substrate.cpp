#include "presem/substrate.hpp"

#include <algorithm>
#include <cmath>

namespace presem {

const char* to_string(Errc code) {
  switch (code) {
    case Errc::usage: return "usage";
    case Errc::duplicate_id: return "duplicate-id";
    case Errc::unknown_reference: return "unknown-reference";
    case Errc::range: return "range";
    case Errc::empty_selection: return "empty-selection";
    case Errc::no_view: return "no-view";
    case Errc::unvalidated: return "unvalidated";
  }
  return "unknown";
}

}  // namespace presem

namespace presem::substrate {

const char* to_string(Polarity p) {
  return p == Polarity::excitatory ? "excitatory" : "inhibitory";
}

const char* to_string(EdgeKind k) {
  switch (k) {
    case EdgeKind::association: return "association";
    case EdgeKind::inference: return "inference";
    case EdgeKind::kinship: return "kinship";
    case EdgeKind::development: return "development";
    case EdgeKind::binding: return "binding";
  }
  return "association";
}

std::optional<EdgeKind> edge_kind_from_string(std::string_view name) {
  for (auto k : {EdgeKind::association, EdgeKind::inference, EdgeKind::kinship,
                 EdgeKind::development, EdgeKind::binding}) {
    if (name == to_string(k)) return k;
  }
  return std::nullopt;
}

const char* to_string(TraceStatus s) {
  switch (s) {
    case TraceStatus::fixpoint: return "fixpoint";
    case TraceStatus::cycle: return "cycle";
    case TraceStatus::tick_budget_exhausted: return "tick-budget-exhausted";
  }
  return "fixpoint";
}

NeuronGraph::NeuronGraph(double theta) : theta_(theta) {
  if (!(theta > 0.0) || !std::isfinite(theta)) {
    throw Error(Errc::range, "theta must be a positive finite number");
  }
}

void NeuronGraph::set_theta(double theta) {
  if (!(theta > 0.0) || !std::isfinite(theta)) {
    throw Error(Errc::range, "theta must be a positive finite number");
  }
  theta_ = theta;
}

NeuronId NeuronGraph::add_neuron(std::optional<std::string> owner_group) {
  NeuronId id{static_cast<std::uint32_t>(neurons_.size())};
  neurons_.push_back({id, std::move(owner_group)});
  return id;
}

void NeuronGraph::add_synapse(const Synapse& s) {
  if (!contains(s.source) || !contains(s.target)) {
    throw Error(Errc::unknown_reference, "synapse endpoint is not a neuron of this graph");
  }
  if (!(s.weight >= 0.0) || !std::isfinite(s.weight)) {
    throw Error(Errc::range, "synapse weight must be finite and non-negative");
  }
  auto [it, inserted] = synapses_.try_emplace(s.key(), s);
  if (!inserted) it->second.weight += s.weight;
}

void NeuronGraph::set_weight(const SynapseKey& key, double weight) {
  auto it = synapses_.find(key);
  if (it == synapses_.end()) {
    throw Error(Errc::unknown_reference, "no such synapse");
  }
  if (!(weight >= 0.0) || !std::isfinite(weight)) {
    throw Error(Errc::range, "synapse weight must be finite and non-negative");
  }
  it->second.weight = weight;
}

const Synapse* NeuronGraph::find(const SynapseKey& key) const {
  auto it = synapses_.find(key);
  return it == synapses_.end() ? nullptr : &it->second;
}

void NeuronGraph::add_group(const std::string& name, std::vector<NeuronId> members) {
  if (groups_.contains(name)) {
    throw Error(Errc::duplicate_id, "duplicate group '" + name + "'");
  }
  if (members.empty()) {
    throw Error(Errc::range, "group '" + name + "' has no members");
  }
  for (NeuronId id : members) {
    if (!contains(id)) throw Error(Errc::unknown_reference, "group member is not a neuron");
  }
  std::sort(members.begin(), members.end());
  members.erase(std::unique(members.begin(), members.end()), members.end());
  groups_.emplace(name, std::move(members));
}

bool NeuronGraph::has_group(std::string_view name) const {
  return groups_.find(name) != groups_.end();
}

std::span<const NeuronId> NeuronGraph::group(std::string_view name) const {
  auto it = groups_.find(name);
  if (it == groups_.end()) {
    throw Error(Errc::unknown_reference, "unknown group '" + std::string(name) + "'");
  }
  return it->second;
}

namespace {

void check_gain(double gain) {
  if (!(gain >= 0.0 && gain <= 1.0)) {
    throw Error(Errc::range, "attention gain must lie in [0,1]");
  }
}

}  // namespace

void AttentionMask::set_neuron_gain(NeuronId id, double gain) {
  check_gain(gain);
  neuron_gain_[id] = gain;
}

void AttentionMask::set_edge_gain(const SynapseKey& key, double gain) {
  check_gain(gain);
  edge_gain_[key] = gain;
}

double AttentionMask::neuron_gain(NeuronId id) const {
  auto it = neuron_gain_.find(id);
  return it == neuron_gain_.end() ? 1.0 : it->second;
}

double AttentionMask::edge_gain(const SynapseKey& key) const {
  auto it = edge_gain_.find(key);
  return it == edge_gain_.end() ? 1.0 : it->second;
}

NeuronGraph build_graph(std::span<const GroupSpec> groups,
                        std::span<const LinkSpec> links,
                        const BuildConfig& config) {
  NeuronGraph graph(config.theta);
  for (const auto& g : groups) {
    if (g.size == 0) {
      throw Error(Errc::range, "group '" + g.name + "' must have at least one neuron");
    }
    if (graph.has_group(g.name)) {
      throw Error(Errc::duplicate_id, "duplicate group '" + g.name + "'");
    }
    std::vector<NeuronId> members;
    members.reserve(g.size);
    for (std::size_t i = 0; i < g.size; ++i) members.push_back(graph.add_neuron(g.name));
    for (NeuronId a : members) {
      for (NeuronId b : members) {
        if (a == b) continue;
        graph.add_synapse({a, b, Polarity::excitatory, config.internal_weight,
                           EdgeKind::association});
      }
    }
    graph.add_group(g.name, std::move(members));
  }

  for (const auto& link : links) {
    if (!graph.has_group(link.from)) {
      throw Error(Errc::unknown_reference, "link references undeclared group '" + link.from + "'");
    }
    if (!graph.has_group(link.to)) {
      throw Error(Errc::unknown_reference, "link references undeclared group '" + link.to + "'");
    }
    if (!(link.weight >= 0.0)) {
      throw Error(Errc::range, "link weight must be non-negative");
    }
    auto from = graph.group(link.from);
    auto to = graph.group(link.to);
    const double per_edge = link.weight / static_cast<double>(from.size());
    for (NeuronId a : from) {
      for (NeuronId b : to) {
        graph.add_synapse({a, b, link.polarity, per_edge, link.kind});
      }
    }
  }
  return graph;
}

namespace {

void require_members(const NeuronGraph& graph, const NeuronSet& ids, const char* what) {
  for (NeuronId id : ids) {
    if (!graph.contains(id)) {
      throw Error(Errc::usage, std::string(what) + " names neuron " +
                                   std::to_string(id.value) + " outside the graph");
    }
  }
}

}  // namespace

ActivationState step(const NeuronGraph& graph, const ActivationState& state,
                     const AttentionMask& gains) {
  require_members(graph, state.firing, "firing set");
  require_members(graph, state.clamped, "clamp set");

  std::vector<double> excite(graph.size(), 0.0);
  std::vector<double> inhibit(graph.size(), 0.0);
  for (const auto& [key, syn] : graph.synapses()) {
    if (!state.firing.contains(syn.source)) continue;
    const double signal = syn.weight * gains.edge_gain(key);
    if (syn.polarity == Polarity::excitatory) {
      excite[syn.target.value] += signal;
    } else {
      inhibit[syn.target.value] += signal;
    }
  }

  ActivationState next;
  next.clamped = state.clamped;
  next.tick = state.tick + 1;
  next.firing = state.clamped;
  for (const auto& n : graph.neurons()) {
    const double net = gains.neuron_gain(n.id) * (excite[n.id.value] - inhibit[n.id.value]);
    if (net >= graph.theta() - kFiringTolerance) next.firing.insert(n.id);
  }
  return next;
}

Trace run_from(const NeuronGraph& graph, const NeuronSet& initial,
               const NeuronSet& clamps, const AttentionMask& gains,
               std::size_t max_ticks) {
  if (max_ticks == 0) throw Error(Errc::usage, "max_ticks must be at least 1");
  if (!std::includes(initial.begin(), initial.end(), clamps.begin(), clamps.end())) {
    throw Error(Errc::usage, "initial firing set must contain every clamped neuron");
  }

  ActivationState state{initial, clamps, 0};
  Trace trace;
  trace.ticks.push_back(state.firing);
  std::set<NeuronSet> seen{state.firing};
  trace.status = TraceStatus::tick_budget_exhausted;

  for (std::size_t t = 0; t < max_ticks; ++t) {
    ActivationState next = step(graph, state, gains);
    trace.ticks.push_back(next.firing);
    if (next.firing == state.firing) {
      trace.status = TraceStatus::fixpoint;
      break;
    }
    if (!seen.insert(next.firing).second) {
      trace.status = TraceStatus::cycle;
      break;
    }
    state = std::move(next);
  }
  return trace;
}

Trace run(const NeuronGraph& graph, const NeuronSet& clamps,
          const AttentionMask& gains, std::size_t max_ticks) {
  return run_from(graph, clamps, clamps, gains, max_ticks);
}

bool group_active(const NeuronSet& firing, std::span<const NeuronId> group, double rho) {
  if (group.empty()) throw Error(Errc::usage, "group_activation on an empty group");
  if (!(rho > 0.0 && rho <= 1.0)) throw Error(Errc::range, "rho must lie in (0,1]");
  std::size_t on = 0;
  for (NeuronId id : group) on += firing.contains(id) ? 1 : 0;
  return static_cast<double>(on) >= rho * static_cast<double>(group.size()) - kFiringTolerance;
}

}  // namespace presem::substrate
