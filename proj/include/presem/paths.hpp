#pragma once

// Static signed-path analysis between neuron groups.

#include <span>
#include <vector>

#include "presem/substrate.hpp"

namespace presem::paths {

using substrate::NeuronGraph;
using substrate::NeuronId;
using substrate::NeuronSet;
using substrate::Synapse;

// Every edge but the last is excitatory; an inhibitory edge can only end a
// path, because an effective inhibitory signal stops propagation there.
struct Path {
  std::vector<Synapse> edges;
  int sign = 1;
  double strength = 1.0;  // product of edge weights

  std::size_t length() const { return edges.size(); }
  bool operator==(const Path&) const = default;
};

struct SignalReport {
  double direct = 0.0;    // length-1 paths
  double indirect = 0.0;  // everything longer
  double total = 0.0;
  std::size_t positive_paths = 0;
  std::size_t negative_paths = 0;

  bool operator==(const SignalReport&) const = default;
};

// Simple paths from a src member to a dst member with at most max_len edges.
// Paths stop at the first dst member and never re-enter src. Sorted by
// length, then by the edge keys.
std::vector<Path> enumerate_paths(const NeuronGraph& graph, const NeuronSet& src,
                                  const NeuronSet& dst, std::size_t max_len);

// Sum of sign * strength over enumerate_paths, divided by |src|.
SignalReport effective_signal(const NeuronGraph& graph, const NeuronSet& src,
                              const NeuronSet& dst, std::size_t max_len);

enum class Equivalence { agree, disagree, out_of_class };

const char* to_string(Equivalence e);

// Acyclic, every weight exactly 1, and every inhibitory edge ends in a sink.
bool in_equivalence_class(const NeuronGraph& graph);

struct EquivalenceResult {
  Equivalence outcome = Equivalence::out_of_class;
  bool static_fires = false;
  bool dynamic_fires = false;
};

// Compares "path total >= theta" with "dst active at the fixpoint of run
// with src clamped". Only meaningful inside the class above.
EquivalenceResult steady_state_equivalence_check(const NeuronGraph& graph,
                                                 const NeuronSet& src, const NeuronSet& dst);

}  // namespace presem::paths
