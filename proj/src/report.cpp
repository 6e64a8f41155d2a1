#include "presem/report.hpp"

namespace presem::report {

namespace {

Json ids(const substrate::NeuronSet& s) {
  Json out = Json::array();
  for (auto id : s) out.push_back(id.value);
  return out;
}

Json step_json(const counterfactual::Step& s) {
  Json j = {{"stage", s.stage}, {"subject", s.subject}, {"outcome", s.outcome}};
  if (s.value) j["value"] = *s.value;
  if (!s.note.empty()) j["note"] = s.note;
  return j;
}

std::string label(const std::vector<std::string>& labels, substrate::NeuronId id) {
  return id.value < labels.size() ? labels[id.value] : std::to_string(id.value);
}

}  // namespace

Json trace_json(const substrate::Trace& trace) {
  Json ticks = Json::array();
  for (const auto& t : trace.ticks) ticks.push_back(ids(t));
  return {{"status", substrate::to_string(trace.status)}, {"ticks", ticks}};
}

Json verdict_json(const counterfactual::Verdict& v) {
  Json features = Json::array();
  for (const auto& f : v.outcome_features) features.push_back(pictures::to_string(f));
  Json explanation = Json::array();
  for (const auto& s : v.explanation) explanation.push_back(step_json(s));
  Json excluded = Json::array();
  for (const auto& e : v.excluded) {
    excluded.push_back({{"picture", e.picture}, {"reason", to_string(e.reason)}, {"value", e.value}});
  }
  return {{"status", to_string(v.status)},
          {"chosen", v.chosen},
          {"outcome_features", features},
          {"explanation", explanation},
          {"excluded", excluded},
          {"composition_order", v.composition_order},
          {"neuron_labels", v.neuron_labels},
          {"trace", trace_json(v.trace)}};
}

Json comparison_json(const counterfactual::OrderComparison& c) {
  Json orders = Json::array();
  for (const auto& o : c.orders) {
    Json features = Json::array();
    for (const auto& f : o.verdict.outcome_features) features.push_back(pictures::to_string(f));
    orders.push_back({{"order", o.order},
                      {"status", to_string(o.verdict.status)},
                      {"outcome_features", features},
                      {"chosen", o.verdict.chosen}});
  }
  return {{"agree", c.agree}, {"orders", orders}};
}

Json paths_json(const std::vector<paths::Path>& found, const paths::SignalReport& signal,
                const std::vector<std::string>& labels) {
  Json list = Json::array();
  for (const auto& p : found) {
    Json hops = Json::array();
    if (!p.edges.empty()) hops.push_back(label(labels, p.edges.front().source));
    for (const auto& e : p.edges) hops.push_back(label(labels, e.target));
    list.push_back({{"hops", hops}, {"sign", p.sign}, {"strength", p.strength}});
  }
  return {{"paths", list},
          {"direct", signal.direct},
          {"indirect", signal.indirect},
          {"total", signal.total},
          {"positive_paths", signal.positive_paths},
          {"negative_paths", signal.negative_paths}};
}

Json accessibility_json(const std::vector<learning::Accessibility>& ranking) {
  Json out = Json::array();
  for (const auto& a : ranking) out.push_back({{"picture", a.picture}, {"score", a.score}});
  return out;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

std::string emit_trace(const counterfactual::Verdict& v) { return dump(verdict_json(v)); }

}  // namespace presem::report
