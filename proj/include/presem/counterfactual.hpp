#pragma once

// Evaluates "if A were the case, C would hold" against a present situation and
// a memory of pictures: retrieve -> filter -> select -> compose -> simulate ->
// read off.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "presem/pictures.hpp"

namespace presem::counterfactual {

using pictures::Feature;
using pictures::Picture;
using substrate::AttentionMask;
using substrate::NeuronGraph;

struct Goal {
  Feature feature;
  double weight = 1.0;
};

struct Query {
  std::vector<Feature> antecedent;
  std::vector<Feature> consequent;
};

// Use only `part` of memory picture `picture` as a composition fragment.
struct Cut {
  std::string picture;
  std::string part;
};

struct Scenario {
  std::string name;
  std::string case_id;
  NeuronGraph graph;               // groups plus background links
  std::vector<Picture> groups;     // one leaf per declared group, tags carried by its neurons
  Picture situation;
  Picture antecedent;              // groups realizing the antecedent features
  std::vector<Picture> memory;
  std::vector<Goal> goals;
  Query query;
  AttentionMask mask;
  std::vector<Cut> cuts;
  bool validated = false;          // set by the DSL front end after checking references
};

// Which permutation of the fragments to compose after the situation.
struct OrderDirective {
  std::optional<std::size_t> permutation;  // nullopt: as given

  static OrderDirective given() { return {}; }
  static OrderDirective permute(std::size_t index) { return {index}; }
};

struct EvalOptions {
  std::size_t max_ticks = 64;
  std::size_t d_max = 0;
  bool nearest_fallback = false;  // keep the closest candidates when none are within d_max
  OrderDirective order;
};

enum class Status { holds, fails, no_applicable_picture, non_terminating };
enum class Reason { irrelevant, hidden, too_distant, outranked };

const char* to_string(Status s);
const char* to_string(Reason r);

struct Step {
  std::string stage;    // retrieve | filter | select | compose | simulate | read-off
  std::string subject;  // picture, fragment, or feature the step is about
  std::string outcome;  // machine-readable tag such as "kept" or "too-distant"
  std::optional<double> value;
  std::string note;

  bool operator==(const Step&) const = default;
};

struct Exclusion {
  std::string picture;
  Reason reason = Reason::irrelevant;
  double value = 0.0;  // distance for too-distant, goal score for outranked

  bool operator==(const Exclusion&) const = default;
};

struct Verdict {
  Status status = Status::no_applicable_picture;
  std::vector<std::string> chosen;
  std::vector<Feature> outcome_features;  // sorted
  std::vector<Step> explanation;
  std::vector<Exclusion> excluded;
  std::vector<std::string> composition_order;
  Picture plan;
  substrate::Trace trace;
  std::vector<std::string> neuron_labels;  // owning group per neuron id

  bool operator==(const Verdict&) const = default;
};

// Memory pictures sharing a feature name with the query, or reachable from the
// cue by a positive path signal. Pictures with a member at gain 0 are dropped.
std::vector<Picture> retrieve(std::span<const Picture> memory, const Query& query,
                              const Picture& cue, const AttentionMask& mask,
                              const NeuronGraph& graph);

// Number of features asserted in one picture and denied in the other.
std::size_t distance(const Picture& p, const Picture& situation);

struct FilterResult {
  std::vector<Picture> kept;
  std::vector<std::pair<std::string, std::size_t>> rejected;  // id, distance
};

FilterResult applicability_filter(std::span<const Picture> candidates, const Picture& situation,
                                  std::size_t d_max = 0, bool nearest_fallback = false);

// Sum over goals of weight * (+1 asserted as wished, -1 opposite, 0 silent).
double goal_score(const Picture& p, std::span<const Goal> goals);

struct Ranked {
  Picture picture;
  double score = 0.0;
  std::size_t distance = 0;
};

// Descending goal score, ties by lower distance, then id.
std::vector<Ranked> select(std::span<const Picture> applicable, std::span<const Goal> goals,
                           const Picture& situation);

Verdict evaluate(const Scenario& scenario, const EvalOptions& options = {});

inline constexpr std::size_t kMaxPermutedFragments = 5;

struct OrderOutcome {
  std::vector<std::string> order;
  Verdict verdict;
};

struct OrderComparison {
  std::vector<OrderOutcome> orders;  // lexicographic permutation order
  bool agree = true;
};

// Evaluates every composition order of the fragments; orders agree when status
// and outcome features coincide.
OrderComparison compare_orders(const Scenario& scenario, EvalOptions options = {});

}  // namespace presem::counterfactual
