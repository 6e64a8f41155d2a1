#pragma once

// Neuron-level substrate: threshold neurons joined by signed, weighted
// synapses, evolving in synchronous discrete ticks.

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "presem/error.hpp"

namespace presem::substrate {

struct NeuronId {
  std::uint32_t value = 0;

  friend constexpr auto operator<=>(NeuronId, NeuronId) = default;
};

using NeuronSet = std::set<NeuronId>;

enum class Polarity : int { excitatory = 1, inhibitory = -1 };

inline int sign_of(Polarity p) { return static_cast<int>(p); }

// What a connection means. Carried as metadata only; the dynamics ignore it.
enum class EdgeKind { association, inference, kinship, development, binding };

const char* to_string(Polarity p);
const char* to_string(EdgeKind k);
std::optional<EdgeKind> edge_kind_from_string(std::string_view name);

struct Neuron {
  NeuronId id;
  std::optional<std::string> owner_group;

  bool operator==(const Neuron&) const = default;
};

struct SynapseKey {
  NeuronId source;
  NeuronId target;
  Polarity polarity = Polarity::excitatory;

  friend constexpr auto operator<=>(const SynapseKey&, const SynapseKey&) = default;
};

struct Synapse {
  NeuronId source;
  NeuronId target;
  Polarity polarity = Polarity::excitatory;
  double weight = 0.0;
  EdgeKind kind = EdgeKind::association;

  SynapseKey key() const { return {source, target, polarity}; }
  bool operator==(const Synapse&) const = default;
};

// Net input must reach theta within this slack to fire. Weights built up by
// repeated additive updates (0.1 + 0.3 + 0.3 + 0.3) land a few ulps short of
// the value they represent.
inline constexpr double kFiringTolerance = 1e-9;

class NeuronGraph {
 public:
  explicit NeuronGraph(double theta = 1.0);

  NeuronId add_neuron(std::optional<std::string> owner_group = std::nullopt);

  // Adds a synapse. An existing edge with the same (source, target, polarity)
  // absorbs the weight instead; the earlier kind is kept.
  void add_synapse(const Synapse& s);
  void set_weight(const SynapseKey& key, double weight);

  // Records a named group over existing neurons.
  void add_group(const std::string& name, std::vector<NeuronId> members);

  bool contains(NeuronId id) const { return id.value < neurons_.size(); }
  std::size_t size() const { return neurons_.size(); }

  const std::vector<Neuron>& neurons() const { return neurons_; }
  const std::map<SynapseKey, Synapse>& synapses() const { return synapses_; }
  const Synapse* find(const SynapseKey& key) const;

  const std::map<std::string, std::vector<NeuronId>, std::less<>>& groups() const { return groups_; }
  bool has_group(std::string_view name) const;
  std::span<const NeuronId> group(std::string_view name) const;

  double theta() const { return theta_; }
  void set_theta(double theta);

  bool operator==(const NeuronGraph&) const = default;

 private:
  std::vector<Neuron> neurons_;
  std::map<SynapseKey, Synapse> synapses_;
  std::map<std::string, std::vector<NeuronId>, std::less<>> groups_;
  double theta_;
};

// Per-neuron and per-edge gains in [0,1]. Absent entries are 1.
class AttentionMask {
 public:
  void set_neuron_gain(NeuronId id, double gain);
  void set_edge_gain(const SynapseKey& key, double gain);

  double neuron_gain(NeuronId id) const;
  double edge_gain(const SynapseKey& key) const;

  const std::map<NeuronId, double>& neuron_gains() const { return neuron_gain_; }
  const std::map<SynapseKey, double>& edge_gains() const { return edge_gain_; }

  bool operator==(const AttentionMask&) const = default;

 private:
  std::map<NeuronId, double> neuron_gain_;
  std::map<SynapseKey, double> edge_gain_;
};

struct ActivationState {
  NeuronSet firing;
  NeuronSet clamped;
  std::uint64_t tick = 0;

  bool operator==(const ActivationState&) const = default;
};

enum class TraceStatus { fixpoint, cycle, tick_budget_exhausted };

const char* to_string(TraceStatus s);

struct Trace {
  std::vector<NeuronSet> ticks;  // ticks[0] is the initial firing set
  TraceStatus status = TraceStatus::fixpoint;

  const NeuronSet& final_firing() const { return ticks.back(); }
  bool operator==(const Trace&) const = default;
};

struct GroupSpec {
  std::string name;
  std::size_t size = 1;
};

struct LinkSpec {
  std::string from;
  std::string to;
  Polarity polarity = Polarity::excitatory;
  double weight = 1.0;
  EdgeKind kind = EdgeKind::association;
};

struct BuildConfig {
  double internal_weight = 1.0;
  double theta = 1.0;
};

// Groups become densely self-connected neuron clusters; each group link of
// weight w fans out all-to-all with w / |source group| per edge, so a fully
// active source delivers w to every target member.
NeuronGraph build_graph(std::span<const GroupSpec> groups,
                        std::span<const LinkSpec> links,
                        const BuildConfig& config = {});

// One synchronous update. A neuron fires next tick iff it is clamped or
// gain * (sum_excitatory - sum_inhibitory) >= theta over edges whose source
// fired this tick.
ActivationState step(const NeuronGraph& graph, const ActivationState& state,
                     const AttentionMask& gains = {});

Trace run(const NeuronGraph& graph, const NeuronSet& clamps,
          const AttentionMask& gains, std::size_t max_ticks);

// Same, but starting from `initial` (which must contain the clamps).
Trace run_from(const NeuronGraph& graph, const NeuronSet& initial,
               const NeuronSet& clamps, const AttentionMask& gains,
               std::size_t max_ticks);

inline constexpr double kDefaultActiveFraction = 0.5;

bool group_active(const NeuronSet& firing, std::span<const NeuronId> group,
                  double rho = kDefaultActiveFraction);

inline bool group_active(const ActivationState& state, std::span<const NeuronId> group,
                         double rho = kDefaultActiveFraction) {
  return group_active(state.firing, group, rho);
}

}  // namespace presem::substrate
