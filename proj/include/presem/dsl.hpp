#pragma once

// Scenario description language: parsing, validation, canonical printing, and
// instantiation into an evaluable Scenario. See docs/dsl.md for the grammar.

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "presem/counterfactual.hpp"
#include "presem/learning.hpp"

namespace presem::dsl {

using pictures::Feature;
using substrate::EdgeKind;
using substrate::Polarity;

struct ScenarioSource {
  std::string text;
  std::string origin;  // file path or inline label
};

enum class ParseErrorKind { syntax, unknown_reference, duplicate_id, range, arity };

const char* to_string(ParseErrorKind k);

struct ParseError {
  std::size_t line = 0;    // 1-based
  std::size_t column = 0;  // 1-based, in bytes
  std::string message;
  ParseErrorKind kind = ParseErrorKind::syntax;
};

inline constexpr std::size_t kMaxDiagnostics = 20;

class ParseFailure : public std::runtime_error {
 public:
  ParseFailure(std::string origin, std::vector<ParseError> errors);

  const std::vector<ParseError>& errors() const { return errors_; }
  const std::string& origin() const { return origin_; }

  // "origin:line:col: kind: message", one per line.
  std::string render() const;

 private:
  std::string origin_;
  std::vector<ParseError> errors_;
};

struct GroupDecl {
  std::string id;
  std::size_t size = 1;
  std::vector<Feature> features;
  bool operator==(const GroupDecl&) const = default;
};

struct LinkDecl {
  std::string from;
  std::string to;
  Polarity polarity = Polarity::excitatory;
  double weight = 1.0;
  EdgeKind kind = EdgeKind::association;
  bool operator==(const LinkDecl&) const = default;
};

struct PictureDecl {
  std::string id;
  std::vector<std::string> parts;  // group or picture ids; order is kept
  std::vector<Feature> features;
  bool operator==(const PictureDecl&) const = default;
};

struct SituationDecl {
  std::string case_id;  // empty for the unnamed situation
  std::vector<Feature> features;
  bool operator==(const SituationDecl&) const = default;
};

struct GoalDecl {
  Feature feature;
  double weight = 1.0;
  bool operator==(const GoalDecl&) const = default;
};

struct QueryDecl {
  std::vector<Feature> antecedent;
  std::vector<Feature> consequent;
  bool operator==(const QueryDecl&) const = default;
};

struct AttentionDecl {
  std::vector<std::string> focus;
  double off_gain = 0.0;
  bool operator==(const AttentionDecl&) const = default;
};

struct CutDecl {
  std::string picture;
  std::string part;
  bool operator==(const CutDecl&) const = default;
};

// The parsed, not yet instantiated, form of a scenario file.
struct ScenarioDocument {
  std::string name;
  std::vector<GroupDecl> groups;
  std::vector<LinkDecl> links;
  std::vector<PictureDecl> pictures;
  std::vector<SituationDecl> situations;
  std::vector<GoalDecl> goals;
  std::optional<QueryDecl> query;
  std::optional<AttentionDecl> attention;
  std::vector<CutDecl> cuts;  // order is the default composition order

  bool operator==(const ScenarioDocument&) const = default;
};

// Sorts every order-insensitive collection; parts and cuts keep their order.
ScenarioDocument canonical(ScenarioDocument doc);

// Equality up to declaration order.
bool structurally_equal(const ScenarioDocument& a, const ScenarioDocument& b);

// Parses and validates. Throws ParseFailure carrying up to kMaxDiagnostics
// errors, the first one being the earliest problem found.
ScenarioDocument parse(const ScenarioSource& src);

// Canonical text: declarations grouped by kind, each kind sorted by id.
std::string serialize(const ScenarioDocument& doc);

std::vector<std::string> case_ids(const ScenarioDocument& doc);

// Case chosen when none is requested: the unnamed situation if declared,
// otherwise the smallest case id.
std::optional<std::string> default_case(const ScenarioDocument& doc);

// Builds the neuron graph and pictures for one situation variant.
counterfactual::Scenario instantiate(const ScenarioDocument& doc,
                                     const std::optional<std::string>& case_id = std::nullopt,
                                     const substrate::BuildConfig& config = {});

// Neuron groups and group-level links exactly as declared.
substrate::NeuronGraph build_document_graph(const ScenarioDocument& doc,
                                            const substrate::BuildConfig& config = {});

// Rewrites the document's links from a (possibly retrained) graph. Group-level
// weight is recovered as the summed member weight divided by the target size.
ScenarioDocument with_graph_links(const ScenarioDocument& doc,
                                  const substrate::NeuronGraph& graph);

// Episode file: one `co-active: ID, ID [duration N]` per line; `#` comments.
// Group ids are checked against `doc`.
std::vector<learning::Episode> parse_episodes(const ScenarioSource& src,
                                              const ScenarioDocument& doc);

}  // namespace presem::dsl
