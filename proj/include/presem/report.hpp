#pragma once

// JSON renderings of verdicts and analysis reports. Keys are sorted and
// numbers printed in shortest round-trip form, so equal inputs give equal bytes.

#include <string>
#include <vector>

#include <json.hpp>

#include "presem/counterfactual.hpp"
#include "presem/learning.hpp"
#include "presem/paths.hpp"

namespace presem::report {

using Json = nlohmann::json;

Json trace_json(const substrate::Trace& trace);
Json verdict_json(const counterfactual::Verdict& v);
Json comparison_json(const counterfactual::OrderComparison& c);

// `labels` maps neuron ids to owning group names for readability.
Json paths_json(const std::vector<paths::Path>& found, const paths::SignalReport& signal,
                const std::vector<std::string>& labels);

Json accessibility_json(const std::vector<learning::Accessibility>& ranking);

std::string dump(const Json& j);

// The trace document for one verdict.
std::string emit_trace(const counterfactual::Verdict& v);

}  // namespace presem::report
