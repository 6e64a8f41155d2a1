// presem: command-line front end for scenario files.
//
// Exit codes: 0 success, 2 parse or validation error, 3 runtime error.

#include <charconv>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "presem/dsl.hpp"
#include "presem/report.hpp"

namespace {

using namespace presem;

constexpr int kExitInvalid = 2;
constexpr int kExitRuntime = 3;

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
}

dsl::ScenarioDocument load(const std::string& path) {
  return dsl::parse({slurp(path), path});
}

std::optional<std::string> pick_case(const dsl::ScenarioDocument& doc, const std::string& file,
                                     const std::string& requested) {
  if (requested.empty()) return std::nullopt;
  const auto ids = dsl::case_ids(doc);
  if (std::find(ids.begin(), ids.end(), requested) == ids.end()) {
    throw InputError(file + ": unknown-reference: no situation case '" + requested + "'");
  }
  return requested;
}

counterfactual::OrderDirective parse_order(const std::vector<std::string>& words) {
  if (words.empty() || (words.size() == 1 && words[0] == "given")) {
    return counterfactual::OrderDirective::given();
  }
  if (words.size() == 2 && words[0] == "permute-index") {
    std::size_t k = 0;
    const auto& s = words[1];
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), k);
    if (ec == std::errc() && ptr == s.data() + s.size()) return counterfactual::OrderDirective::permute(k);
  }
  throw InputError("--order expects 'given' or 'permute-index K'");
}

report::Json with_context(report::Json j, const counterfactual::Scenario& s) {
  j["scenario"] = s.name;
  j["case"] = s.case_id;
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Picture-based counterfactual evaluation over threshold-neuron graphs"};
  app.require_subcommand(1);

  std::string file;
  std::string case_id;
  double theta = 1.0;
  std::size_t max_ticks = 64;
  std::vector<std::string> order_words;
  std::size_t d_max = 0;
  bool fallback = false;
  std::string trace_out;
  std::string from;
  std::string to;
  std::size_t max_len = learning::kDefaultAccessDepth;
  std::string episodes_file;
  double eta = learning::PlasticityConfig{}.eta;
  std::string out_file;

  auto* check = app.add_subcommand("check", "Parse and validate a scenario file");
  check->add_option("file", file, "Scenario file")->required();

  auto add_eval_options = [&](CLI::App* cmd) {
    cmd->add_option("file", file, "Scenario file")->required();
    cmd->add_option("--case", case_id, "Situation case id");
    cmd->add_option("--theta", theta, "Firing threshold")->check(CLI::PositiveNumber);
    cmd->add_option("--max-ticks", max_ticks, "Tick budget")->check(CLI::PositiveNumber);
    cmd->add_option("--d-max", d_max, "Largest admissible conflict distance");
    cmd->add_flag("--fallback-nearest", fallback,
                  "Keep the nearest candidates when none lie within --d-max");
  };

  auto* run = app.add_subcommand("run", "Evaluate the scenario query");
  add_eval_options(run);
  run->add_option("--order", order_words, "given | permute-index K")->expected(1, 2);
  run->add_option("--trace", trace_out, "Write the trace document here");

  auto* paths_cmd = app.add_subcommand("paths", "Enumerate signed paths between two groups");
  paths_cmd->add_option("file", file, "Scenario file")->required();
  paths_cmd->add_option("--from", from, "Source group")->required();
  paths_cmd->add_option("--to", to, "Target group")->required();
  paths_cmd->add_option("--max-len", max_len, "Longest path in edges")->check(CLI::PositiveNumber);
  paths_cmd->add_option("--theta", theta, "Firing threshold")->check(CLI::PositiveNumber);

  auto* compare = app.add_subcommand("compare-orders", "Evaluate every fragment composition order");
  add_eval_options(compare);

  auto* learn = app.add_subcommand("learn", "Apply co-activation episodes to the links");
  learn->add_option("file", file, "Scenario file")->required();
  learn->add_option("--episodes", episodes_file, "Episode file")->required();
  learn->add_option("--eta", eta, "Learning rate")->check(CLI::PositiveNumber);
  learn->add_option("--out", out_file, "Write the retrained scenario here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitInvalid;
  }

  try {
    const auto doc = load(file);
    substrate::BuildConfig build;
    build.theta = theta;

    if (check->parsed()) {
      report::Json j = {{"scenario", doc.name},
                        {"groups", doc.groups.size()},
                        {"pictures", doc.pictures.size()},
                        {"cases", dsl::case_ids(doc)},
                        {"valid", true}};
      std::cout << report::dump(j);
      return 0;
    }

    if (run->parsed() || compare->parsed()) {
      const auto scenario = dsl::instantiate(doc, pick_case(doc, file, case_id), build);
      counterfactual::EvalOptions options;
      options.max_ticks = max_ticks;
      options.d_max = d_max;
      options.nearest_fallback = fallback;
      if (run->parsed()) {
        options.order = parse_order(order_words);
        const auto verdict = counterfactual::evaluate(scenario, options);
        const auto text = report::dump(with_context(report::verdict_json(verdict), scenario));
        if (!trace_out.empty()) spit(trace_out, text);
        std::cout << text;
      } else {
        const auto cmp = counterfactual::compare_orders(scenario, options);
        std::cout << report::dump(with_context(report::comparison_json(cmp), scenario));
      }
      return 0;
    }

    if (paths_cmd->parsed()) {
      const auto graph = dsl::build_document_graph(doc, build);
      for (const auto& g : {from, to}) {
        if (!graph.has_group(g)) throw InputError(file + ": unknown-reference: undeclared group '" + g + "'");
      }
      const auto src = graph.group(from);
      const auto dst = graph.group(to);
      const substrate::NeuronSet s(src.begin(), src.end());
      const substrate::NeuronSet d(dst.begin(), dst.end());
      std::vector<std::string> labels;
      for (const auto& n : graph.neurons()) labels.push_back(n.owner_group.value_or(""));
      auto j = report::paths_json(paths::enumerate_paths(graph, s, d, max_len),
                                  paths::effective_signal(graph, s, d, max_len), labels);
      j["from"] = from;
      j["to"] = to;
      j["max_len"] = max_len;
      std::cout << report::dump(j);
      return 0;
    }

    if (learn->parsed()) {
      const auto episodes = dsl::parse_episodes({slurp(episodes_file), episodes_file}, doc);
      learning::PlasticityConfig cfg;
      cfg.eta = eta;
      auto graph = dsl::build_document_graph(doc, build);
      for (const auto& e : episodes) graph = learning::delta_update(graph, e, cfg);
      const auto trained = dsl::with_graph_links(doc, graph);

      report::Json links = report::Json::array();
      for (const auto& l : dsl::canonical(trained).links) {
        links.push_back({{"from", l.from},
                         {"to", l.to},
                         {"polarity", substrate::to_string(l.polarity)},
                         {"weight", l.weight}});
      }
      report::Json j = {{"scenario", doc.name}, {"episodes", episodes.size()}, {"links", links}};
      if (!out_file.empty()) spit(out_file, dsl::serialize(trained));
      std::cout << report::dump(j);
      return 0;
    }
  } catch (const dsl::ParseFailure& e) {
    std::cerr << e.render();
    return kExitInvalid;
  } catch (const InputError& e) {
    std::cerr << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "presem: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitRuntime;
}
