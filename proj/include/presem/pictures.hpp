#pragma once

// Meaning-level layer. A picture is a labeled group of neurons with a
// decomposition tree and feature tags; every tag is mirrored by the neurons
// that carry it, so conflicts can be resolved with real inhibitory edges.

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "presem/substrate.hpp"

namespace presem::pictures {

using substrate::AttentionMask;
using substrate::NeuronGraph;
using substrate::NeuronId;
using substrate::NeuronSet;
using substrate::Polarity;
using substrate::Synapse;

enum class Stance { asserted, denied };

struct Feature {
  std::string name;
  Stance stance = Stance::asserted;

  Feature negated() const {
    return {name, stance == Stance::asserted ? Stance::denied : Stance::asserted};
  }
  friend auto operator<=>(const Feature&, const Feature&) = default;
};

// "dry" / "!dry"
std::string to_string(const Feature& f);
std::optional<Feature> parse_feature(std::string_view text);

enum class ConflictPolicy { left_wins, right_wins, keep_both };

const char* to_string(ConflictPolicy p);

struct CompositionRecord {
  std::string left;
  std::string right;
  ConflictPolicy policy = ConflictPolicy::left_wins;
  std::size_t link_count = 0;
  std::vector<Feature> overridden;  // tags dropped by conflict resolution

  bool operator==(const CompositionRecord&) const = default;
};

struct Picture {
  std::string id;
  NeuronSet members;
  std::vector<Picture> parts;
  std::map<Feature, NeuronSet> features;  // tag -> carrier neurons
  std::vector<CompositionRecord> provenance;
  std::vector<Synapse> glue;  // edges added by composition, in creation order

  bool has(const Feature& f) const { return features.contains(f); }
  std::vector<Feature> feature_list() const;

  bool operator==(const Picture&) const = default;
};

// A picture over raw neurons with no declared parts.
Picture make_leaf(std::string id, NeuronSet members,
                  std::map<Feature, NeuronSet> features = {});

// A picture assembled from parts. Members and tags are the union over parts;
// `extra` tags are attached without carriers.
Picture make_whole(std::string id, std::vector<Picture> parts,
                   std::span<const Feature> extra = {});

// Throws unless part members nest in their parents and no leaf carries a
// feature in both stances.
void validate(const Picture& p);

// Depth-first search over p and its descendants.
const Picture* find_part(const Picture& p, std::string_view id);

struct PartNamed {
  std::string id;
};
struct PartsCarrying {
  std::function<bool(const Feature&)> predicate;
};
struct AllParts {};

using PartSelector = std::variant<PartNamed, PartsCarrying, AllParts>;

// Parts of p picked by the selector. Pictures without declared parts split
// into single-neuron leaves with no tags. Throws empty_selection when nothing
// matches, which includes every single-neuron picture.
std::vector<Picture> decompose(const Picture& p, const PartSelector& selector);

struct BindingLink {
  using Endpoint = std::variant<NeuronId, std::string>;  // neuron or part id

  Endpoint left;
  Endpoint right;
  Polarity polarity = Polarity::excitatory;
  double weight = 1.0;
};

struct Binding {
  std::vector<BindingLink> links;
  ConflictPolicy policy = ConflictPolicy::left_wins;
  double conflict_weight = 2.0;  // inhibition laid on the losing carriers
};

// Order-sensitive composition: parts become [left, right], binding links run
// left -> right, and conflicting tags are resolved per the policy. Neither
// commutative nor associative.
Picture compose(const Picture& left, const Picture& right, const Binding& binding,
                std::optional<std::string> id = std::nullopt);

// The largest part of target (target itself included) every member of which
// receives more excitation than inhibition from observer. nullopt when the
// observer touches target but fully sees no part; throws no_view when it has
// no edge into target at all.
std::optional<Picture> abstraction_view(const Picture& observer, const Picture& target,
                                        const NeuronGraph& graph);

// Gain 1 on members of the named pictures (searched through `catalog` and
// their parts) and on edges among them; off_gain on everything else.
AttentionMask focus(const NeuronGraph& graph, std::span<const Picture> catalog,
                    std::span<const std::string> targets, double off_gain = 0.0);

struct Contradiction {
  std::string first;
  std::string second;

  bool operator==(const Contradiction&) const = default;
};

// Pairs of sibling parts, at any depth, joined by inhibition in both
// directions with every member visible (gain > 0) under the mask.
std::vector<Contradiction> consistency_report(const Picture& p, const AttentionMask& mask,
                                              const NeuronGraph& graph);

}  // namespace presem::pictures
