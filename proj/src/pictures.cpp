#include "presem/pictures.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace presem::pictures {

std::string to_string(const Feature& f) {
  return (f.stance == Stance::denied ? "!" : "") + f.name;
}

std::optional<Feature> parse_feature(std::string_view text) {
  Feature f;
  if (!text.empty() && text.front() == '!') {
    f.stance = Stance::denied;
    text.remove_prefix(1);
  }
  if (text.empty()) return std::nullopt;
  f.name = std::string(text);
  return f;
}

const char* to_string(ConflictPolicy p) {
  switch (p) {
    case ConflictPolicy::left_wins: return "left-wins";
    case ConflictPolicy::right_wins: return "right-wins";
    case ConflictPolicy::keep_both: return "keep-both";
  }
  return "left-wins";
}

std::vector<Feature> Picture::feature_list() const {
  std::vector<Feature> out;
  out.reserve(features.size());
  for (const auto& [f, carriers] : features) out.push_back(f);
  return out;
}

Picture make_leaf(std::string id, NeuronSet members, std::map<Feature, NeuronSet> features) {
  Picture p;
  p.id = std::move(id);
  p.members = std::move(members);
  p.features = std::move(features);
  return p;
}

Picture make_whole(std::string id, std::vector<Picture> parts, std::span<const Feature> extra) {
  Picture p;
  p.id = std::move(id);
  for (const auto& part : parts) {
    p.members.insert(part.members.begin(), part.members.end());
    for (const auto& [f, carriers] : part.features) {
      p.features[f].insert(carriers.begin(), carriers.end());
    }
    p.glue.insert(p.glue.end(), part.glue.begin(), part.glue.end());
  }
  for (const auto& f : extra) p.features.try_emplace(f);
  p.parts = std::move(parts);
  return p;
}

void validate(const Picture& p) {
  for (const auto& part : p.parts) {
    if (!std::includes(p.members.begin(), p.members.end(), part.members.begin(),
                       part.members.end())) {
      throw Error(Errc::range, "part '" + part.id + "' is not contained in '" + p.id + "'");
    }
    validate(part);
  }
  if (p.parts.empty()) {
    for (const auto& [f, carriers] : p.features) {
      if (f.stance == Stance::asserted && p.features.contains(f.negated())) {
        throw Error(Errc::range, "leaf '" + p.id + "' both asserts and denies '" + f.name + "'");
      }
    }
  }
}

const Picture* find_part(const Picture& p, std::string_view id) {
  if (p.id == id) return &p;
  for (const auto& part : p.parts) {
    if (const Picture* hit = find_part(part, id)) return hit;
  }
  return nullptr;
}

namespace {

std::vector<Picture> synthetic_leaves(const Picture& p) {
  std::vector<Picture> out;
  if (p.members.size() < 2) return out;
  for (NeuronId n : p.members) {
    out.push_back(make_leaf(p.id + "#" + std::to_string(n.value), {n}));
  }
  return out;
}

std::vector<Picture> immediate_parts(const Picture& p) {
  return p.parts.empty() ? synthetic_leaves(p) : p.parts;
}

}  // namespace

std::vector<Picture> decompose(const Picture& p, const PartSelector& selector) {
  if (p.members.empty()) {
    throw Error(Errc::usage, "cannot decompose the empty picture '" + p.id + "'");
  }
  const std::vector<Picture> parts = immediate_parts(p);
  std::vector<Picture> selected;

  if (std::holds_alternative<AllParts>(selector)) {
    selected = parts;
  } else if (const auto* named = std::get_if<PartNamed>(&selector)) {
    for (const auto& part : parts) {
      if (part.id == named->id) selected.push_back(part);
    }
    if (selected.empty()) {
      for (const auto& part : parts) {
        if (const Picture* hit = find_part(part, named->id)) {
          selected.push_back(*hit);
          break;
        }
      }
    }
  } else {
    const auto& pred = std::get<PartsCarrying>(selector).predicate;
    for (const auto& part : parts) {
      if (std::any_of(part.features.begin(), part.features.end(),
                      [&](const auto& kv) { return pred(kv.first); })) {
        selected.push_back(part);
      }
    }
  }

  if (selected.empty()) {
    throw Error(Errc::empty_selection, "selector matches no part of '" + p.id + "'");
  }
  return selected;
}

namespace {

NeuronSet resolve_endpoint(const Picture& operand, const BindingLink::Endpoint& end,
                           const char* side) {
  if (const auto* n = std::get_if<NeuronId>(&end)) {
    if (!operand.members.contains(*n)) {
      throw Error(Errc::unknown_reference, std::string("binding names neuron ") +
                                               std::to_string(n->value) + " outside the " +
                                               side + " operand");
    }
    return {*n};
  }
  const auto& id = std::get<std::string>(end);
  const Picture* part = find_part(operand, id);
  if (part == nullptr) {
    throw Error(Errc::unknown_reference,
                "binding names unknown part '" + id + "' of the " + side + " operand");
  }
  return part->members;
}

void fan_out(std::vector<Synapse>& glue, const NeuronSet& from, const NeuronSet& to,
             Polarity polarity, double weight) {
  if (from.empty() || to.empty()) return;
  const double per_edge = weight / static_cast<double>(from.size());
  for (NeuronId a : from) {
    for (NeuronId b : to) {
      if (a == b) continue;
      glue.push_back({a, b, polarity, per_edge, substrate::EdgeKind::binding});
    }
  }
}

bool is_blank(const Picture& p) { return p.members.empty() && p.features.empty(); }

}  // namespace

Picture compose(const Picture& left, const Picture& right, const Binding& binding,
                std::optional<std::string> id) {
  // Resolve every link up front so a bad binding fails before any work.
  std::vector<std::pair<NeuronSet, NeuronSet>> ends;
  ends.reserve(binding.links.size());
  for (const auto& link : binding.links) {
    if (!(link.weight >= 0.0)) throw Error(Errc::range, "binding weight must be non-negative");
    ends.emplace_back(resolve_endpoint(left, link.left, "left"),
                      resolve_endpoint(right, link.right, "right"));
  }

  CompositionRecord record{left.id, right.id, binding.policy, binding.links.size(), {}};

  if (binding.links.empty() && (is_blank(right) || is_blank(left))) {
    Picture same = is_blank(right) ? left : right;
    same.provenance.push_back(std::move(record));
    return same;
  }

  Picture out;
  out.id = id ? *id : "(" + left.id + " + " + right.id + ")";
  out.members = left.members;
  out.members.insert(right.members.begin(), right.members.end());
  out.glue = left.glue;
  out.glue.insert(out.glue.end(), right.glue.begin(), right.glue.end());
  out.provenance = left.provenance;
  out.provenance.insert(out.provenance.end(), right.provenance.begin(), right.provenance.end());

  for (std::size_t i = 0; i < binding.links.size(); ++i) {
    const auto& link = binding.links[i];
    fan_out(out.glue, ends[i].first, ends[i].second, link.polarity, link.weight);
  }

  std::set<Feature> dropped_left;
  std::set<Feature> dropped_right;
  if (binding.policy != ConflictPolicy::keep_both) {
    for (const auto& [f, left_carriers] : left.features) {
      auto opposite = right.features.find(f.negated());
      if (opposite == right.features.end()) continue;
      const auto& right_carriers = opposite->second;
      if (binding.policy == ConflictPolicy::left_wins) {
        fan_out(out.glue, left_carriers, right_carriers, Polarity::inhibitory,
                binding.conflict_weight);
        dropped_right.insert(opposite->first);
      } else {
        fan_out(out.glue, right_carriers, left_carriers, Polarity::inhibitory,
                binding.conflict_weight);
        dropped_left.insert(f);
      }
    }
  }

  for (const auto& [f, carriers] : left.features) {
    if (!dropped_left.contains(f)) out.features[f].insert(carriers.begin(), carriers.end());
  }
  for (const auto& [f, carriers] : right.features) {
    if (!dropped_right.contains(f)) out.features[f].insert(carriers.begin(), carriers.end());
  }

  record.overridden.assign(dropped_left.begin(), dropped_left.end());
  record.overridden.insert(record.overridden.end(), dropped_right.begin(), dropped_right.end());
  out.provenance.push_back(std::move(record));
  out.parts = {left, right};
  return out;
}

namespace {

void collect_candidates(const Picture& p, std::vector<const Picture*>& out,
                        std::vector<Picture>& owned_leaves) {
  out.push_back(&p);
  if (p.parts.empty()) {
    for (auto& leaf : synthetic_leaves(p)) owned_leaves.push_back(std::move(leaf));
    return;
  }
  for (const auto& part : p.parts) collect_candidates(part, out, owned_leaves);
}

}  // namespace

std::optional<Picture> abstraction_view(const Picture& observer, const Picture& target,
                                        const NeuronGraph& graph) {
  std::map<NeuronId, double> excite;
  std::map<NeuronId, double> inhibit;
  bool touched = false;
  for (const auto& [key, syn] : graph.synapses()) {
    if (!observer.members.contains(syn.source) || !target.members.contains(syn.target)) {
      continue;
    }
    if (observer.members.contains(syn.target)) continue;
    touched = true;
    (syn.polarity == Polarity::excitatory ? excite : inhibit)[syn.target] += syn.weight;
  }
  if (!touched) {
    throw Error(Errc::no_view, "'" + observer.id + "' has no connection into '" + target.id + "'");
  }

  auto seen = [&](NeuronId n) { return excite[n] > inhibit[n]; };
  auto fully_seen = [&](const Picture& p) {
    return !p.members.empty() && std::all_of(p.members.begin(), p.members.end(), seen);
  };

  std::vector<const Picture*> candidates;
  std::vector<Picture> leaves;
  collect_candidates(target, candidates, leaves);
  // Leaves are appended after the tree walk so pointers into `leaves` stay valid.
  for (const auto& leaf : leaves) candidates.push_back(&leaf);

  const Picture* best = nullptr;
  for (const Picture* c : candidates) {
    if (!fully_seen(*c)) continue;
    if (best == nullptr || c->members.size() > best->members.size()) best = c;
  }
  if (best == nullptr) return std::nullopt;
  return *best;
}

namespace {

const Picture* find_in_catalog(std::span<const Picture> catalog, std::string_view id) {
  for (const auto& p : catalog) {
    if (const Picture* hit = find_part(p, id)) return hit;
  }
  return nullptr;
}

}  // namespace

AttentionMask focus(const NeuronGraph& graph, std::span<const Picture> catalog,
                    std::span<const std::string> targets, double off_gain) {
  if (!(off_gain >= 0.0 && off_gain < 1.0)) {
    throw Error(Errc::range, "off-gain must lie in [0,1)");
  }
  NeuronSet lit;
  for (const auto& id : targets) {
    const Picture* p = find_in_catalog(catalog, id);
    if (p == nullptr) throw Error(Errc::unknown_reference, "focus on unknown picture '" + id + "'");
    lit.insert(p->members.begin(), p->members.end());
  }
  AttentionMask mask;
  for (const auto& n : graph.neurons()) {
    mask.set_neuron_gain(n.id, lit.contains(n.id) ? 1.0 : off_gain);
  }
  for (const auto& [key, syn] : graph.synapses()) {
    const bool inside = lit.contains(key.source) && lit.contains(key.target);
    mask.set_edge_gain(key, inside ? 1.0 : off_gain);
  }
  return mask;
}

namespace {

bool visible(const Picture& p, const AttentionMask& mask) {
  return std::all_of(p.members.begin(), p.members.end(),
                     [&](NeuronId n) { return mask.neuron_gain(n) > 0.0; });
}

bool inhibits(const std::vector<Synapse>& edges, const Picture& from, const Picture& to) {
  return std::any_of(edges.begin(), edges.end(), [&](const Synapse& s) {
    return s.polarity == Polarity::inhibitory && s.weight > 0.0 &&
           from.members.contains(s.source) && to.members.contains(s.target);
  });
}

void scan(const Picture& p, const AttentionMask& mask, const std::vector<Synapse>& edges,
          std::vector<Contradiction>& out) {
  for (std::size_t i = 0; i < p.parts.size(); ++i) {
    for (std::size_t j = i + 1; j < p.parts.size(); ++j) {
      const auto& a = p.parts[i];
      const auto& b = p.parts[j];
      if (!visible(a, mask) || !visible(b, mask)) continue;
      if (inhibits(edges, a, b) && inhibits(edges, b, a)) out.push_back({a.id, b.id});
    }
  }
  for (const auto& part : p.parts) scan(part, mask, edges, out);
}

}  // namespace

std::vector<Contradiction> consistency_report(const Picture& p, const AttentionMask& mask,
                                              const NeuronGraph& graph) {
  std::vector<Synapse> edges;
  edges.reserve(graph.synapses().size() + p.glue.size());
  for (const auto& [key, syn] : graph.synapses()) edges.push_back(syn);
  edges.insert(edges.end(), p.glue.begin(), p.glue.end());

  std::vector<Contradiction> out;
  scan(p, mask, edges, out);
  return out;
}

}  // namespace presem::pictures
