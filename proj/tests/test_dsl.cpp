#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "support.hpp"

#include "presem/dsl.hpp"

using namespace presem;
using namespace presem::dsl;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::filesystem::path> corpus() {
  std::vector<std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(PRESEM_SCENARIO_DIR)) {
    if (entry.path().extension() == ".psm") out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<ParseError> errors_of(const std::string& text) {
  try {
    parse({text, "inline"});
  } catch (const ParseFailure& f) {
    return f.errors();
  }
  return {};
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::string joined(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  return out;
}

}  // namespace

TEST_SUITE("dsl") {

TEST_CASE("the umbrella file parses") {
  const auto doc = parse({slurp(std::string(PRESEM_SCENARIO_DIR) + "/umbrella.psm"), "umbrella"});
  CHECK(doc.name == "umbrella");
  CHECK(doc.groups.size() == 14);
  CHECK(doc.pictures.size() == 5);
  CHECK(doc.situations.size() == 3);
  CHECK(case_ids(doc) == std::vector<std::string>{"1", "2", "3"});
  CHECK(default_case(doc) == "1");
  REQUIRE(doc.query);
  CHECK(doc.query->antecedent == std::vector<Feature>{{"rain"}});
  CHECK(doc.goals[0].weight == 2.0);
}

TEST_CASE("the whole corpus parses and instantiates") {
  const auto files = corpus();
  CHECK(files.size() >= 8);
  for (const auto& f : files) {
    CAPTURE(f.string());
    const auto doc = parse({slurp(f), f.string()});
    const auto s = instantiate(doc, default_case(doc));
    CHECK(s.validated);
    CHECK(s.memory.size() == doc.pictures.size());
  }
}

TEST_CASE("a misspelt reference points at itself") {
  const std::string text =
      "scenario \"x\"\n"
      "group umbrella\n"
      "group rain\n"
      "link rain -> umbrela : 1\n";
  const auto errs = errors_of(text);
  REQUIRE(errs.size() == 1);
  CHECK(errs[0].kind == ParseErrorKind::unknown_reference);
  CHECK(errs[0].line == 4);
  CHECK(errs[0].column == 14);
  CHECK(errs[0].message.find("umbrela") != std::string::npos);
}

TEST_CASE("negative weights are range errors, not syntax errors") {
  const auto goal = errors_of("scenario \"x\"\ngroup dry feature dry\ngoal dry weight -1\n");
  REQUIRE(goal.size() == 1);
  CHECK(goal[0].kind == ParseErrorKind::range);
  CHECK(goal[0].line == 3);

  const auto link = errors_of("scenario \"x\"\ngroup a\nlink a -> a : -0.5\n");
  REQUIRE(link.size() == 1);
  CHECK(link[0].kind == ParseErrorKind::range);
}

TEST_CASE("other diagnostics") {
  const auto dup = errors_of("scenario \"x\"\ngroup a\ngroup a\n");
  REQUIRE(dup.size() == 1);
  CHECK(dup[0].kind == ParseErrorKind::duplicate_id);
  CHECK(dup[0].line == 3);

  const auto loop = errors_of(
      "scenario \"x\"\ngroup a\npicture p { parts: q }\npicture q { parts: p, a }\n");
  REQUIRE_FALSE(loop.empty());
  CHECK(loop[0].kind == ParseErrorKind::arity);

  const auto size = errors_of("scenario \"x\"\ngroup a size 0\n");
  REQUIRE(size.size() == 1);
  CHECK(size[0].kind == ParseErrorKind::range);

  const auto missing = errors_of("group a\n");
  REQUIRE_FALSE(missing.empty());
  CHECK(missing[0].kind == ParseErrorKind::syntax);
  CHECK(missing[0].line == 1);

  const auto utf = errors_of("scenario \"\xff\"\n");
  REQUIRE(utf.size() == 1);
  CHECK(utf[0].message.find("UTF-8") != std::string::npos);
}

TEST_CASE("diagnostics are capped and ordered") {
  std::string text = "scenario \"x\"\ngroup a\n";
  for (int i = 0; i < 40; ++i) text += "link a -> ghost" + std::to_string(i) + " : 1\n";
  const auto errs = errors_of(text);
  CHECK(errs.size() == kMaxDiagnostics);
  for (std::size_t i = 1; i < errs.size(); ++i) CHECK(errs[i - 1].line < errs[i].line);
  try {
    parse({text, "many.psm"});
  } catch (const ParseFailure& f) {
    CHECK(f.render().rfind("many.psm:3:11: unknown-reference:", 0) == 0);
  }
}

TEST_CASE("smallest document") {
  const auto doc = parse({"scenario \"m\"\ngroup a\n", "min"});
  CHECK(doc.groups.size() == 1);
  CHECK_FALSE(doc.query);
  CHECK(serialize(doc) == "scenario \"m\"\n\ngroup a\n");
  CHECK_FALSE(default_case(doc));
}

TEST_CASE("printing sorts declarations") {
  const auto doc = parse({"scenario \"s\"\nlink b -> a : 0.5\ngroup b\ngroup a feature !x\n", "s"});
  CHECK(serialize(doc) ==
        "scenario \"s\"\n"
        "\n"
        "group a feature !x\n"
        "group b\n"
        "\n"
        "link b -> a : 0.5\n");
}

TEST_CASE("parts and cuts keep their order") {
  const auto doc = parse({slurp(std::string(PRESEM_SCENARIO_DIR) + "/tree_felling.psm"), "t"});
  const auto again = parse({serialize(doc), "t"});
  REQUIRE(again.cuts.size() == 2);
  CHECK(again.cuts[0].picture == "tent-picture");
  CHECK(again.cuts[1].picture == "hammock-picture");
  const auto hammock = std::find_if(again.pictures.begin(), again.pictures.end(),
                                   [](const auto& p) { return p.id == "hammock-picture"; });
  REQUIRE(hammock != again.pictures.end());
  CHECK(hammock->parts ==
        std::vector<std::string>{"rope", "hammock", "young-trees", "bending"});
}

TEST_CASE("round trip over the corpus") {
  for (const auto& f : corpus()) {
    CAPTURE(f.string());
    const auto doc = parse({slurp(f), f.string()});
    const auto text = serialize(doc);
    const auto again = parse({text, "again"});
    CHECK(structurally_equal(doc, again));
    CHECK(serialize(again) == text);
  }
}

TEST_CASE("property: round trip over random documents") {
  std::mt19937 rng(61);
  for (int trial = 0; trial < 500; ++trial) {
    const auto doc = testing::random_document(rng);
    const auto text = serialize(doc);
    CAPTURE(text);
    const auto again = parse({text, "random"});
    CHECK(structurally_equal(doc, again));
    CHECK(canonical(doc) == canonical(again));
    CHECK(serialize(again) == text);
  }
}

TEST_CASE("property: a broken reference is reported where it was broken") {
  const auto base = lines_of(slurp(std::string(PRESEM_SCENARIO_DIR) + "/umbrella.psm"));
  std::vector<std::size_t> link_lines;
  for (std::size_t i = 0; i < base.size(); ++i) {
    if (base[i].rfind("link ", 0) == 0 || base[i].rfind("picture ", 0) == 0) link_lines.push_back(i);
  }
  std::mt19937 rng(62);
  std::uniform_int_distribution<std::size_t> pick(0, link_lines.size() - 1);
  for (int trial = 0; trial < 200; ++trial) {
    auto lines = base;
    const std::size_t at = link_lines[pick(rng)];
    // The last group name on the line is a reference in both declaration kinds.
    std::string& line = lines[at];
    std::size_t target = std::string::npos;
    for (const auto& g : {"rain", "calm", "wind", "carrying", "torn", "soaked", "cheese", "umbrella-intact",
                          "use-umbrella", "no-umbrella", "dry"}) {
      const auto pos = line.rfind(std::string(" ") + g);
      if (pos != std::string::npos && (target == std::string::npos || pos > target)) target = pos;
    }
    REQUIRE(target != std::string::npos);
    line.insert(target + 1, "zz");
    const auto errs = errors_of(joined(lines));
    CAPTURE(line);
    REQUIRE(errs.size() == 1);
    CHECK(errs[0].kind == ParseErrorKind::unknown_reference);
    CHECK(errs[0].line == at + 1);
    CHECK(errs[0].column == target + 2);
  }
}

TEST_CASE("property: a stray token is caught on its line and parsing resumes") {
  const auto base = lines_of(slurp(std::string(PRESEM_SCENARIO_DIR) + "/umbrella.psm"));
  std::vector<std::size_t> decls;
  for (std::size_t i = 1; i < base.size(); ++i) {
    if (!base[i].empty() && base[i][0] != '#' && base[i].rfind("scenario", 0) != 0) decls.push_back(i);
  }
  std::mt19937 rng(63);
  std::uniform_int_distribution<std::size_t> pick(0, decls.size() - 1);
  for (int trial = 0; trial < 200; ++trial) {
    auto lines = base;
    const std::size_t ia = pick(rng);
    const std::size_t ib = pick(rng);
    const std::size_t a = decls[ia];
    const std::size_t b = decls[ib];
    lines[a] = "@ " + lines[a];
    if (b != a) lines[b] += " @";
    const auto errs = errors_of(joined(lines));
    REQUIRE_FALSE(errs.empty());
    CHECK(errs[0].line == std::min(a, b) + 1);
    CHECK(errs[0].kind == ParseErrorKind::syntax);
    // Recovery skips to the next declaration, so only separated damage is
    // guaranteed a second report.
    if (std::max(ia, ib) - std::min(ia, ib) >= 2) CHECK(errs.size() >= 2);
  }
}

TEST_CASE("episodes") {
  const auto doc = parse({slurp(std::string(PRESEM_SCENARIO_DIR) + "/tiger.psm"), "tiger"});
  const auto eps = parse_episodes(
      {"# comment\nco-active: roar, tiger\n\nco-active: grass tiger roar duration 3\n", "e"}, doc);
  REQUIRE(eps.size() == 2);
  CHECK(eps[0].co_active_groups == std::vector<std::string>{"roar", "tiger"});
  CHECK(eps[0].duration == 1);
  CHECK(eps[1].co_active_groups.size() == 3);
  CHECK(eps[1].duration == 3);

  try {
    parse_episodes({"co-active: roar, lion\nco-active: roar duration 0\n", "bad"}, doc);
    FAIL("expected a parse failure");
  } catch (const ParseFailure& f) {
    REQUIRE(f.errors().size() == 2);
    CHECK(f.errors()[0].kind == ParseErrorKind::unknown_reference);
    CHECK(f.errors()[1].kind == ParseErrorKind::range);
    CHECK(f.errors()[1].line == 2);
  }
}

TEST_CASE("graph links round trip through a retrained graph") {
  const auto doc = parse({slurp(std::string(PRESEM_SCENARIO_DIR) + "/tiger.psm"), "tiger"});
  const auto g = build_document_graph(doc);
  CHECK(structurally_equal(with_graph_links(doc, g), doc));
}

}  // TEST_SUITE
