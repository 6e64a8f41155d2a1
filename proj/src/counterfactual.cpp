#include "presem/counterfactual.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "presem/learning.hpp"

namespace presem::counterfactual {

using pictures::Binding;
using pictures::BindingLink;
using pictures::ConflictPolicy;
using pictures::Stance;
using substrate::NeuronId;
using substrate::NeuronSet;

const char* to_string(Status s) {
  switch (s) {
    case Status::holds: return "holds";
    case Status::fails: return "fails";
    case Status::no_applicable_picture: return "no-applicable-picture";
    case Status::non_terminating: return "non-terminating";
  }
  return "fails";
}

const char* to_string(Reason r) {
  switch (r) {
    case Reason::irrelevant: return "irrelevant";
    case Reason::hidden: return "hidden";
    case Reason::too_distant: return "too-distant";
    case Reason::outranked: return "outranked";
  }
  return "irrelevant";
}

namespace {

bool hidden(const Picture& p, const AttentionMask& mask) {
  return std::any_of(p.members.begin(), p.members.end(),
                     [&](NeuronId n) { return mask.neuron_gain(n) <= 0.0; });
}

}  // namespace

std::vector<Picture> retrieve(std::span<const Picture> memory, const Query& query,
                              const Picture& cue, const AttentionMask& mask,
                              const NeuronGraph& graph) {
  std::set<std::string> names;
  for (const auto& f : query.antecedent) names.insert(f.name);
  for (const auto& f : query.consequent) names.insert(f.name);

  std::map<std::string, double> access;
  if (!cue.members.empty()) {
    for (const auto& a : learning::accessibility(memory, graph, cue)) access[a.picture] = a.score;
  }

  std::vector<Picture> out;
  for (const auto& p : memory) {
    if (hidden(p, mask)) continue;
    const bool overlaps = std::any_of(p.features.begin(), p.features.end(),
                                      [&](const auto& kv) { return names.contains(kv.first.name); });
    if (overlaps || access[p.id] > substrate::kFiringTolerance) out.push_back(p);
  }
  return out;
}

std::size_t distance(const Picture& p, const Picture& situation) {
  std::size_t conflicts = 0;
  for (const auto& [f, carriers] : p.features) {
    if (situation.has(f.negated())) ++conflicts;
  }
  return conflicts;
}

FilterResult applicability_filter(std::span<const Picture> candidates, const Picture& situation,
                                  std::size_t d_max, bool nearest_fallback) {
  std::vector<std::size_t> d;
  d.reserve(candidates.size());
  for (const auto& c : candidates) d.push_back(distance(c, situation));

  std::size_t limit = d_max;
  const bool none_close = std::none_of(d.begin(), d.end(), [&](std::size_t x) { return x <= d_max; });
  if (nearest_fallback && none_close && !d.empty()) limit = *std::min_element(d.begin(), d.end());

  FilterResult result;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (d[i] <= limit) {
      result.kept.push_back(candidates[i]);
    } else {
      result.rejected.emplace_back(candidates[i].id, d[i]);
    }
  }
  return result;
}

double goal_score(const Picture& p, std::span<const Goal> goals) {
  double score = 0.0;
  for (const auto& g : goals) {
    if (p.has(g.feature)) score += g.weight;
    if (p.has(g.feature.negated())) score -= g.weight;
  }
  return score;
}

std::vector<Ranked> select(std::span<const Picture> applicable, std::span<const Goal> goals,
                           const Picture& situation) {
  std::vector<Ranked> ranked;
  ranked.reserve(applicable.size());
  for (const auto& p : applicable) ranked.push_back({p, goal_score(p, goals), distance(p, situation)});
  std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.picture.id < b.picture.id;
  });
  return ranked;
}

namespace {

struct Unit {
  Picture picture;
  std::string source;  // memory picture it came from
};

std::vector<std::size_t> nth_permutation(std::size_t n, std::size_t index) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = 0; i < index; ++i) {
    if (!std::next_permutation(perm.begin(), perm.end())) {
      throw Error(Errc::usage, "permutation index " + std::to_string(index) +
                                   " out of range for " + std::to_string(n) + " fragments");
    }
  }
  return perm;
}

std::string goal_conflicts(const Picture& p, std::span<const Goal> goals) {
  std::string out;
  for (const auto& g : goals) {
    if (!p.has(g.feature.negated())) continue;
    if (!out.empty()) out += "; ";
    out += pictures::to_string(g.feature.negated()) + " contradicts goal " +
           pictures::to_string(g.feature);
  }
  return out;
}

std::vector<Feature> read_features(const Scenario& s, const NeuronSet& firing) {
  std::set<Feature> active;
  for (const auto& g : s.groups) {
    const std::vector<NeuronId> members(g.members.begin(), g.members.end());
    if (members.empty() || !substrate::group_active(firing, members)) continue;
    for (const auto& [f, carriers] : g.features) active.insert(f);
  }
  return {active.begin(), active.end()};
}

}  // namespace

Verdict evaluate(const Scenario& s, const EvalOptions& options) {
  if (!s.validated) throw Error(Errc::unvalidated, "scenario has not been validated");
  if (s.query.antecedent.empty() || s.query.consequent.empty()) {
    throw Error(Errc::usage, "scenario has no query");
  }

  Verdict v;
  for (const auto& n : s.graph.neurons()) v.neuron_labels.push_back(n.owner_group.value_or(""));

  // Retrieve.
  const auto retrieved = retrieve(s.memory, s.query, s.antecedent, s.mask, s.graph);
  std::set<std::string> retrieved_ids;
  for (const auto& p : retrieved) retrieved_ids.insert(p.id);
  for (const auto& p : s.memory) {
    if (retrieved_ids.contains(p.id)) {
      v.explanation.push_back({"retrieve", p.id, "kept", std::nullopt, ""});
    } else {
      v.explanation.push_back(
          {"retrieve", p.id, hidden(p, s.mask) ? "hidden" : "irrelevant", std::nullopt, ""});
    }
  }

  // Candidate units: whole pictures plus any declared cuts of them.
  std::vector<Unit> units;
  for (const auto& p : retrieved) units.push_back({p, p.id});
  std::vector<std::string> cut_ids;
  for (const auto& cut : s.cuts) {
    auto it = std::find_if(retrieved.begin(), retrieved.end(),
                           [&](const Picture& p) { return p.id == cut.picture; });
    if (it == retrieved.end()) {
      v.explanation.push_back({"cut", cut.picture + "/" + cut.part, "source-not-retrieved",
                               std::nullopt, ""});
      continue;
    }
    Picture fragment = pictures::decompose(*it, pictures::PartNamed{cut.part}).front();
    fragment.id = cut.picture + "/" + cut.part;
    v.explanation.push_back({"cut", fragment.id, "cut", std::nullopt, ""});
    cut_ids.push_back(fragment.id);
    units.push_back({std::move(fragment), cut.picture});
  }

  // Filter.
  std::vector<Picture> unit_pictures;
  for (const auto& u : units) unit_pictures.push_back(u.picture);
  const auto filtered =
      applicability_filter(unit_pictures, s.situation, options.d_max, options.nearest_fallback);
  std::set<std::string> applicable_ids;
  for (const auto& p : filtered.kept) {
    applicable_ids.insert(p.id);
    v.explanation.push_back(
        {"filter", p.id, "applicable", static_cast<double>(distance(p, s.situation)), ""});
  }
  for (const auto& [id, d] : filtered.rejected) {
    v.explanation.push_back({"filter", id, "too-distant", static_cast<double>(d), ""});
  }

  // Select.
  const auto ranked = select(filtered.kept, s.goals, s.situation);
  for (const auto& r : ranked) {
    v.explanation.push_back({"select", r.picture.id, "ranked", r.score, ""});
  }

  std::vector<const Unit*> fragments;
  if (!cut_ids.empty()) {
    for (const auto& id : cut_ids) {
      if (!applicable_ids.contains(id)) continue;
      for (const auto& u : units) {
        if (u.picture.id == id) fragments.push_back(&u);
      }
    }
  } else if (!ranked.empty()) {
    for (const auto& u : units) {
      if (u.picture.id == ranked.front().picture.id) fragments.push_back(&u);
    }
  }

  for (const auto* f : fragments) {
    if (std::find(v.chosen.begin(), v.chosen.end(), f->source) == v.chosen.end()) {
      v.chosen.push_back(f->source);
    }
  }
  std::map<std::string, double> scores;
  for (const auto& r : ranked) scores[r.picture.id] = r.score;
  for (const auto& p : s.memory) {
    if (std::find(v.chosen.begin(), v.chosen.end(), p.id) != v.chosen.end()) continue;
    if (hidden(p, s.mask)) {
      v.excluded.push_back({p.id, Reason::hidden, 0.0});
    } else if (!retrieved_ids.contains(p.id)) {
      v.excluded.push_back({p.id, Reason::irrelevant, 0.0});
    } else if (!applicable_ids.contains(p.id)) {
      v.excluded.push_back({p.id, Reason::too_distant, static_cast<double>(distance(p, s.situation))});
    } else {
      v.excluded.push_back({p.id, Reason::outranked, scores[p.id]});
    }
  }

  if (fragments.empty()) {
    v.status = Status::no_applicable_picture;
    v.plan = s.situation;
    return v;
  }

  // Compose: situation first, then the supposition, then fragments in order.
  std::vector<const Unit*> ordered = fragments;
  if (options.order.permutation) {
    const auto perm = nth_permutation(fragments.size(), *options.order.permutation);
    for (std::size_t i = 0; i < perm.size(); ++i) ordered[i] = fragments[perm[i]];
  }

  Binding supposition;
  supposition.policy = ConflictPolicy::right_wins;
  Picture plan = pictures::compose(s.situation, s.antecedent, supposition);
  v.explanation.push_back({"compose", s.antecedent.id, "supposed", std::nullopt, ""});

  NeuronSet clamps = s.situation.members;
  clamps.insert(s.antecedent.members.begin(), s.antecedent.members.end());

  for (const Unit* frag : ordered) {
    Binding binding;
    const std::vector<Picture> targets =
        frag->picture.parts.empty() ? std::vector<Picture>{frag->picture} : frag->picture.parts;
    for (const auto& source : s.antecedent.parts) {
      for (const auto& target : targets) {
        if (std::includes(clamps.begin(), clamps.end(), target.members.begin(),
                          target.members.end())) {
          continue;
        }
        binding.links.push_back(
            {BindingLink::Endpoint{source.id}, BindingLink::Endpoint{target.id},
             substrate::Polarity::excitatory, 1.0});
      }
    }
    plan = pictures::compose(plan, frag->picture, binding);
    v.composition_order.push_back(frag->picture.id);
    v.explanation.push_back({"compose", frag->picture.id, "composed",
                             static_cast<double>(binding.links.size()), ""});
  }
  v.plan = plan;

  // Simulate on the background graph plus the glue the composition laid down.
  NeuronGraph working = s.graph;
  for (const auto& edge : plan.glue) working.add_synapse(edge);
  v.trace = substrate::run(working, clamps, s.mask, options.max_ticks);
  v.explanation.push_back({"simulate", plan.id, substrate::to_string(v.trace.status),
                           static_cast<double>(v.trace.ticks.size() - 1), ""});

  if (v.trace.status != substrate::TraceStatus::fixpoint) {
    v.status = Status::non_terminating;
    return v;
  }

  // Read off.
  v.outcome_features = read_features(s, v.trace.final_firing());
  bool consequent_active = true;
  for (const auto& f : s.query.consequent) {
    const bool on = std::binary_search(v.outcome_features.begin(), v.outcome_features.end(), f);
    consequent_active = consequent_active && on;
    v.explanation.push_back({"read-off", pictures::to_string(f), on ? "active" : "inactive",
                             std::nullopt, ""});
  }
  bool helps = true;
  for (const Unit* frag : fragments) {
    const double score = goal_score(frag->picture, s.goals);
    if (score < 0.0) {
      helps = false;
      v.explanation.push_back({"read-off", frag->picture.id, "negative-goal-score", score,
                               goal_conflicts(frag->picture, s.goals)});
    }
  }
  v.status = consequent_active && helps ? Status::holds : Status::fails;
  return v;
}

OrderComparison compare_orders(const Scenario& scenario, EvalOptions options) {
  options.order = OrderDirective::given();
  const Verdict base = evaluate(scenario, options);
  const std::size_t n = base.composition_order.size();
  if (n > kMaxPermutedFragments) {
    throw Error(Errc::range, std::to_string(n) + " fragments exceed the permutation bound of " +
                                 std::to_string(kMaxPermutedFragments));
  }

  OrderComparison report;
  if (n <= 1) {
    report.orders.push_back({base.composition_order, base});
    return report;
  }
  std::size_t count = 1;
  for (std::size_t i = 2; i <= n; ++i) count *= i;
  for (std::size_t k = 0; k < count; ++k) {
    options.order = OrderDirective::permute(k);
    Verdict v = evaluate(scenario, options);
    auto order = v.composition_order;
    report.orders.push_back({std::move(order), std::move(v)});
  }
  const auto& first = report.orders.front().verdict;
  for (const auto& o : report.orders) {
    if (o.verdict.status != first.status || o.verdict.outcome_features != first.outcome_features) {
      report.agree = false;
    }
  }
  return report;
}

}  // namespace presem::counterfactual
