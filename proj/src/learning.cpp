#include "presem/learning.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace presem::learning {

using substrate::NeuronId;
using substrate::Polarity;
using substrate::SynapseKey;

void PlasticityConfig::check() const {
  if (!(eta > 0.0)) throw Error(Errc::range, "eta must be positive");
  if (!(use_rate > 0.0)) throw Error(Errc::range, "use_rate must be positive");
  if (!(w_max >= 1.0)) throw Error(Errc::range, "w_max must be at least 1");
}

namespace {

double grown(double weight, double increment, double cap) {
  return std::max(weight, std::min(weight + increment, cap));
}

std::vector<std::string> distinct_groups(const NeuronGraph& graph, const Episode& e) {
  if (e.co_active_groups.empty()) throw Error(Errc::usage, "episode names no groups");
  if (e.duration == 0) throw Error(Errc::range, "episode duration must be positive");
  std::vector<std::string> out;
  for (const auto& g : e.co_active_groups) {
    if (!graph.has_group(g)) throw Error(Errc::unknown_reference, "unknown group '" + g + "'");
    if (std::find(out.begin(), out.end(), g) == out.end()) out.push_back(g);
  }
  return out;
}

}  // namespace

NeuronGraph delta_update(const NeuronGraph& graph, const Episode& episode,
                         const PlasticityConfig& cfg) {
  cfg.check();
  const auto groups = distinct_groups(graph, episode);
  const double increment = cfg.eta * static_cast<double>(episode.duration);

  NeuronGraph out = graph;
  for (const auto& from_name : groups) {
    for (const auto& to_name : groups) {
      if (from_name == to_name) continue;
      const auto from = graph.group(from_name);
      const auto to = graph.group(to_name);
      bool found = false;
      for (NeuronId a : from) {
        for (NeuronId b : to) {
          const SynapseKey key{a, b, Polarity::excitatory};
          if (const auto* syn = graph.find(key)) {
            found = true;
            out.set_weight(key, grown(syn->weight, increment, cfg.w_max));
          }
        }
      }
      if (!found) {
        out.add_synapse({from.front(), to.front(), Polarity::excitatory,
                         std::min(increment, cfg.w_max), substrate::EdgeKind::association});
      }
    }
  }
  return out;
}

NeuronGraph use_strengthen(const NeuronGraph& graph, const Episode& used,
                           const PlasticityConfig& cfg) {
  cfg.check();
  std::set<SynapseKey> touched;
  if (!used.co_active_groups.empty()) {
    for (const auto& name : distinct_groups(graph, used)) {
      const auto members = graph.group(name);
      for (NeuronId a : members) {
        for (NeuronId b : members) {
          const SynapseKey key{a, b, Polarity::excitatory};
          if (graph.find(key) != nullptr) touched.insert(key);
        }
      }
    }
  }
  for (const auto& path : used.used_paths) {
    for (const auto& edge : path.edges) {
      if (graph.find(edge.key()) == nullptr) {
        throw Error(Errc::unknown_reference, "used path runs over a synapse not in the graph");
      }
      touched.insert(edge.key());
    }
  }

  NeuronGraph out = graph;
  for (const auto& key : touched) {
    out.set_weight(key, grown(graph.find(key)->weight, cfg.use_rate, cfg.w_max));
  }
  return out;
}

std::vector<Accessibility> accessibility(std::span<const pictures::Picture> memory,
                                         const NeuronGraph& graph, const pictures::Picture& cue,
                                         std::size_t max_len) {
  std::vector<Accessibility> out;
  out.reserve(memory.size());
  for (const auto& p : memory) {
    substrate::NeuronSet targets;
    std::set_difference(p.members.begin(), p.members.end(), cue.members.begin(),
                        cue.members.end(), std::inserter(targets, targets.end()));
    double score = 0.0;
    if (!targets.empty() && !cue.members.empty()) {
      score = paths::effective_signal(graph, cue.members, targets, max_len).total;
    }
    out.push_back({p.id, score});
  }
  std::stable_sort(out.begin(), out.end(), [](const Accessibility& a, const Accessibility& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.picture < b.picture;
  });
  return out;
}

std::size_t episodes_to_threshold(double theta, double w0, double eta, std::size_t duration) {
  if (!(eta > 0.0) || duration == 0) throw Error(Errc::range, "eta and duration must be positive");
  const double gap = theta - w0;
  if (gap <= substrate::kFiringTolerance) return 0;
  const double ratio = gap / (eta * static_cast<double>(duration));
  return static_cast<std::size_t>(std::ceil(ratio - substrate::kFiringTolerance));
}

}  // namespace presem::learning
