#pragma once

// Plasticity: co-activation strengthening, use strengthening, and the
// accessibility ranking those weights induce. Weights only ever grow.

#include <span>
#include <string>
#include <vector>

#include "presem/paths.hpp"
#include "presem/pictures.hpp"

namespace presem::learning {

using substrate::NeuronGraph;

struct Episode {
  std::vector<std::string> co_active_groups;
  std::vector<paths::Path> used_paths;
  std::size_t duration = 1;
};

struct PlasticityConfig {
  double eta = 0.5;
  double w_max = 10.0;
  double use_rate = 0.1;

  void check() const;
};

// Every excitatory synapse from one co-active group into another gains
// eta * duration, capped at w_max. A pair with no such synapse gets one
// between the groups' lowest-id members. Inhibitory weights are untouched.
NeuronGraph delta_update(const NeuronGraph& graph, const Episode& episode,
                         const PlasticityConfig& cfg);

// Internal excitatory weights of the episode's groups and every edge on its
// used paths gain use_rate once, capped at w_max.
NeuronGraph use_strengthen(const NeuronGraph& graph, const Episode& used,
                           const PlasticityConfig& cfg);

struct Accessibility {
  std::string picture;
  double score = 0.0;

  bool operator==(const Accessibility&) const = default;
};

inline constexpr std::size_t kDefaultAccessDepth = 6;

// Path-signal score from the cue into each picture's members (cue members
// excluded), highest first, ties by picture id.
std::vector<Accessibility> accessibility(std::span<const pictures::Picture> memory,
                                         const NeuronGraph& graph, const pictures::Picture& cue,
                                         std::size_t max_len = kDefaultAccessDepth);

// Number of identical episodes after which a single edge starting at w0
// reaches theta: ceil((theta - w0) / (eta * duration)), 0 if already there.
std::size_t episodes_to_threshold(double theta, double w0, double eta, std::size_t duration = 1);

}  // namespace presem::learning
