#include "presem/dsl.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <set>

namespace presem::dsl {

const char* to_string(ParseErrorKind k) {
  switch (k) {
    case ParseErrorKind::syntax: return "syntax";
    case ParseErrorKind::unknown_reference: return "unknown-reference";
    case ParseErrorKind::duplicate_id: return "duplicate-id";
    case ParseErrorKind::range: return "range";
    case ParseErrorKind::arity: return "arity";
  }
  return "syntax";
}

namespace {

std::string summarize(const std::string& origin, const std::vector<ParseError>& errors) {
  if (errors.empty()) return origin + ": parse failed";
  const auto& e = errors.front();
  return origin + ":" + std::to_string(e.line) + ":" + std::to_string(e.column) + ": " +
         to_string(e.kind) + ": " + e.message;
}

}  // namespace

ParseFailure::ParseFailure(std::string origin, std::vector<ParseError> errors)
    : std::runtime_error(summarize(origin, errors)),
      origin_(std::move(origin)),
      errors_(std::move(errors)) {}

std::string ParseFailure::render() const {
  std::string out;
  for (const auto& e : errors_) {
    out += origin_ + ":" + std::to_string(e.line) + ":" + std::to_string(e.column) + ": " +
           to_string(e.kind) + ": " + e.message + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Lexer

namespace {

enum class Tok { ident, string, number, arrow, bar, colon, lbrace, rbrace, comma, bang, end, bad };

struct Loc {
  std::size_t line = 1;
  std::size_t column = 1;
};

struct Token {
  Tok kind = Tok::end;
  std::string text;
  Loc at;
};

bool ident_start(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
}
bool ident_char(char c) { return ident_start(c) || (c >= '0' && c <= '9'); }
bool digit(char c) { return c >= '0' && c <= '9'; }

// Byte offset of the first malformed UTF-8 sequence, if any.
std::optional<std::size_t> invalid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    if (c < 0x80) len = 1;
    else if ((c >> 5) == 0x6) len = 2;
    else if ((c >> 4) == 0xE) len = 3;
    else if ((c >> 3) == 0x1E) len = 4;
    else return i;
    if (i + len > s.size()) return i;
    for (std::size_t k = 1; k < len; ++k) {
      if ((static_cast<unsigned char>(s[i + k]) >> 6) != 0x2) return i;
    }
    i += len;
  }
  return std::nullopt;
}

class Lexer {
 public:
  Lexer(std::string_view text, Loc start = {}) : text_(text), loc_(start) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      Token t = next();
      out.push_back(t);
      if (t.kind == Tok::end) break;
    }
    return out;
  }

 private:
  char peek(std::size_t ahead = 0) const {
    return pos_ + ahead < text_.size() ? text_[pos_ + ahead] : '\0';
  }

  void advance() {
    if (text_[pos_] == '\n') {
      ++loc_.line;
      loc_.column = 1;
    } else {
      ++loc_.column;
    }
    ++pos_;
  }

  Token next() {
    for (;;) {
      while (pos_ < text_.size() && (peek() == ' ' || peek() == '\t' || peek() == '\r' || peek() == '\n')) {
        advance();
      }
      if (peek() == '#') {
        while (pos_ < text_.size() && peek() != '\n') advance();
        continue;
      }
      break;
    }
    Token t;
    t.at = loc_;
    if (pos_ >= text_.size()) return t;

    const char c = peek();
    const std::size_t begin = pos_;
    auto take = [&](Tok kind, std::size_t n) {
      for (std::size_t i = 0; i < n; ++i) advance();
      t.kind = kind;
      t.text = std::string(text_.substr(begin, n));
      return t;
    };

    if (c == '-' && peek(1) == '>') return take(Tok::arrow, 2);
    if (c == '-' && peek(1) == '|') return take(Tok::bar, 2);
    if (c == ':') return take(Tok::colon, 1);
    if (c == '{') return take(Tok::lbrace, 1);
    if (c == '}') return take(Tok::rbrace, 1);
    if (c == ',') return take(Tok::comma, 1);
    if (c == '!') return take(Tok::bang, 1);

    if (digit(c) || ((c == '-' || c == '+' || c == '.') && (digit(peek(1)) || (peek(1) == '.' && digit(peek(2)))))) {
      advance();
      while (digit(peek()) || peek() == '.') advance();
      if ((peek() == 'e' || peek() == 'E') &&
          (digit(peek(1)) || ((peek(1) == '-' || peek(1) == '+') && digit(peek(2))))) {
        advance();
        advance();
        while (digit(peek())) advance();
      }
      t.kind = Tok::number;
      t.text = std::string(text_.substr(begin, pos_ - begin));
      return t;
    }

    if (ident_start(c)) {
      advance();
      for (;;) {
        if (ident_char(peek())) {
          advance();
        } else if (peek() == '-' && ident_char(peek(1))) {
          advance();
        } else {
          break;
        }
      }
      t.kind = Tok::ident;
      t.text = std::string(text_.substr(begin, pos_ - begin));
      return t;
    }

    if (c == '"') {
      advance();
      std::string value;
      while (pos_ < text_.size() && peek() != '"' && peek() != '\n') {
        if (peek() == '\\' && (peek(1) == '"' || peek(1) == '\\')) advance();
        value += peek();
        advance();
      }
      if (peek() != '"') {
        t.kind = Tok::bad;
        t.text = "unterminated string";
        return t;
      }
      advance();
      t.kind = Tok::string;
      t.text = std::move(value);
      return t;
    }

    // Consume a whole UTF-8 sequence so the next token starts cleanly.
    advance();
    while (pos_ < text_.size() && (static_cast<unsigned char>(peek()) >> 6) == 0x2) advance();
    t.kind = Tok::bad;
    t.text = std::string(text_.substr(begin, pos_ - begin));
    return t;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  Loc loc_;
};

const std::set<std::string, std::less<>> kDeclKeywords = {
    "scenario", "group", "link", "picture", "situation", "goal", "query", "attention", "cut"};

bool is_decl_keyword(const Token& t) {
  return t.kind == Tok::ident && kDeclKeywords.contains(t.text);
}

// ---------------------------------------------------------------------------
// Parser

struct LocatedFeature {
  Feature feature;
  Loc at;
};

struct LocatedId {
  std::string id;
  Loc at;
};

// Token positions kept beside the document so validation can point at them.
struct Locations {
  struct Group { Loc id; Loc size; std::vector<Loc> features; };
  struct Link { Loc from; Loc to; Loc weight; };
  struct Picture { Loc id; std::vector<Loc> parts; std::vector<Loc> features; };
  struct Situation { Loc keyword; Loc case_id; std::vector<Loc> features; };
  struct Goal { Loc feature; Loc weight; };
  struct Query { Loc keyword; std::vector<Loc> antecedent; std::vector<Loc> consequent; };
  struct Attention { Loc keyword; std::vector<Loc> focus; Loc off_gain; };
  struct Cut { Loc picture; Loc part; };

  std::vector<Group> groups;
  std::vector<Link> links;
  std::vector<Picture> pictures;
  std::vector<Situation> situations;
  std::vector<Goal> goals;
  std::vector<Query> queries;
  std::vector<Attention> attentions;
  std::vector<Cut> cuts;
};

struct SyntaxError {
  Loc at;
  std::string message;
};

class Parser {
 public:
  Parser(std::vector<Token> tokens, std::vector<ParseError>& errors)
      : tokens_(std::move(tokens)), errors_(errors) {}

  ScenarioDocument parse_document(Locations& locs) {
    ScenarioDocument doc;
    try {
      expect_keyword("scenario");
      doc.name = expect(Tok::string, "scenario name string").text;
    } catch (const SyntaxError& e) {
      report(e);
      synchronize();
    }

    while (cur().kind != Tok::end && !full()) {
      try {
        parse_decl(doc, locs);
      } catch (const SyntaxError& e) {
        report(e);
        synchronize();
      }
    }
    return doc;
  }

 private:
  const Token& cur() const { return tokens_[pos_]; }
  const Token& peek_tok(std::size_t ahead) const {
    return tokens_[std::min(pos_ + ahead, tokens_.size() - 1)];
  }
  Token take() {
    Token t = cur();
    if (t.kind != Tok::end) ++pos_;
    return t;
  }
  bool full() const { return errors_.size() >= kMaxDiagnostics; }

  [[noreturn]] void fail(const std::string& wanted) const {
    const Token& t = cur();
    std::string got;
    switch (t.kind) {
      case Tok::end: got = "end of input"; break;
      case Tok::bad: got = "'" + t.text + "'"; break;
      case Tok::string: got = "string \"" + t.text + "\""; break;
      default: got = "'" + t.text + "'";
    }
    throw SyntaxError{t.at, "expected " + wanted + ", found " + got};
  }

  Token expect(Tok kind, const std::string& wanted) {
    if (cur().kind != kind) fail(wanted);
    return take();
  }

  Token expect_keyword(std::string_view word) {
    if (cur().kind != Tok::ident || cur().text != word) fail("'" + std::string(word) + "'");
    return take();
  }

  bool at_keyword(std::string_view word) const {
    return cur().kind == Tok::ident && cur().text == word;
  }

  LocatedId expect_id(const std::string& wanted) {
    if (cur().kind != Tok::ident || is_decl_keyword(cur())) fail(wanted);
    Token t = take();
    return {t.text, t.at};
  }

  bool at_feature() const {
    if (cur().kind == Tok::bang) return true;
    return cur().kind == Tok::ident && !is_decl_keyword(cur());
  }

  LocatedFeature expect_feature() {
    const Loc at = cur().at;
    Feature f;
    if (cur().kind == Tok::bang) {
      take();
      f.stance = pictures::Stance::denied;
      if (cur().kind != Tok::ident || is_decl_keyword(cur())) fail("feature name after '!'");
    } else if (cur().kind != Tok::ident || is_decl_keyword(cur())) {
      fail("feature");
    }
    f.name = take().text;
    return {std::move(f), at};
  }

  // Features separated by whitespace or commas, until `stop` (if given) or a
  // token that cannot start a feature.
  std::vector<LocatedFeature> feature_list(std::string_view stop = {}) {
    std::vector<LocatedFeature> out;
    for (;;) {
      if (!stop.empty() && at_keyword(stop)) break;
      if (!at_feature()) break;
      out.push_back(expect_feature());
      if (cur().kind == Tok::comma) take();
    }
    return out;
  }

  std::vector<LocatedId> id_list(std::string_view stop = {}) {
    std::vector<LocatedId> out;
    for (;;) {
      if (!stop.empty() && at_keyword(stop) && peek_tok(1).kind == Tok::colon) break;
      if (cur().kind != Tok::ident || is_decl_keyword(cur())) break;
      Token t = take();
      out.push_back({t.text, t.at});
      if (cur().kind == Tok::comma) take();
    }
    return out;
  }

  std::pair<double, Loc> expect_number(const std::string& wanted) {
    if (cur().kind != Tok::number) fail(wanted);
    Token t = take();
    double value = 0.0;
    const char* first = t.text.data();
    const char* last = first + t.text.size();
    if (*first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec == std::errc::result_out_of_range) {
      value = std::numeric_limits<double>::infinity();
    } else if (ec != std::errc() || ptr != last) {
      throw SyntaxError{t.at, "malformed number '" + t.text + "'"};
    }
    return {value, t.at};
  }

  void report(const SyntaxError& e) {
    if (!full()) errors_.push_back({e.at.line, e.at.column, e.message, ParseErrorKind::syntax});
  }

  // Skip ahead to the next declaration keyword.
  void synchronize() {
    if (cur().kind != Tok::end) take();
    while (cur().kind != Tok::end && !is_decl_keyword(cur())) take();
  }

  void parse_decl(ScenarioDocument& doc, Locations& locs) {
    if (cur().kind != Tok::ident || !is_decl_keyword(cur())) fail("declaration");
    const Token kw = take();
    const std::string& k = kw.text;

    if (k == "scenario") {
      throw SyntaxError{kw.at, "only one scenario per file"};
    } else if (k == "group") {
      GroupDecl g;
      Locations::Group loc;
      auto id = expect_id("group id");
      g.id = id.id;
      loc.id = loc.size = id.at;
      if (at_keyword("size")) {
        take();
        auto [value, at] = expect_number("group size");
        loc.size = at;
        // Range problems are reported by validation; keep a sentinel here.
        g.size = (value >= 1.0 && value == std::floor(value) && value < 1e9)
                     ? static_cast<std::size_t>(value) : 0;
      }
      if (at_keyword("feature")) {
        take();
        auto features = feature_list();
        if (features.empty()) fail("feature");
        for (auto& f : features) {
          g.features.push_back(f.feature);
          loc.features.push_back(f.at);
        }
      }
      doc.groups.push_back(std::move(g));
      locs.groups.push_back(std::move(loc));
    } else if (k == "link") {
      LinkDecl l;
      Locations::Link loc;
      auto from = expect_id("link source group");
      l.from = from.id;
      loc.from = from.at;
      if (cur().kind == Tok::arrow) {
        l.polarity = Polarity::excitatory;
      } else if (cur().kind == Tok::bar) {
        l.polarity = Polarity::inhibitory;
      } else {
        fail("'->' or '-|'");
      }
      take();
      auto to = expect_id("link target group");
      l.to = to.id;
      loc.to = to.at;
      expect(Tok::colon, "':'");
      auto [w, wat] = expect_number("link weight");
      l.weight = w;
      loc.weight = wat;
      if (at_keyword("kind")) {
        take();
        if (cur().kind != Tok::ident) fail("connection kind");
        const Token kt = cur();
        auto kind = substrate::edge_kind_from_string(kt.text);
        if (!kind) {
          throw SyntaxError{kt.at, "unknown connection kind '" + kt.text +
                                       "' (association, inference, kinship, development, binding)"};
        }
        take();
        l.kind = *kind;
      }
      doc.links.push_back(std::move(l));
      locs.links.push_back(loc);
    } else if (k == "picture") {
      PictureDecl p;
      Locations::Picture loc;
      auto id = expect_id("picture id");
      p.id = id.id;
      loc.id = id.at;
      expect(Tok::lbrace, "'{'");
      expect_keyword("parts");
      expect(Tok::colon, "':' after 'parts'");
      for (auto& part : id_list("features")) {
        p.parts.push_back(part.id);
        loc.parts.push_back(part.at);
      }
      if (at_keyword("features")) {
        take();
        expect(Tok::colon, "':' after 'features'");
        for (auto& f : feature_list()) {
          p.features.push_back(f.feature);
          loc.features.push_back(f.at);
        }
      }
      expect(Tok::rbrace, "'}'");
      doc.pictures.push_back(std::move(p));
      locs.pictures.push_back(std::move(loc));
    } else if (k == "situation") {
      SituationDecl s;
      Locations::Situation loc;
      loc.keyword = loc.case_id = kw.at;
      if (at_keyword("case")) {
        take();
        if (cur().kind != Tok::ident && cur().kind != Tok::number) fail("case id");
        if (is_decl_keyword(cur())) fail("case id");
        Token t = take();
        s.case_id = t.text;
        loc.case_id = t.at;
      }
      expect(Tok::lbrace, "'{'");
      for (auto& f : feature_list()) {
        s.features.push_back(f.feature);
        loc.features.push_back(f.at);
      }
      expect(Tok::rbrace, "'}'");
      doc.situations.push_back(std::move(s));
      locs.situations.push_back(std::move(loc));
    } else if (k == "goal") {
      GoalDecl g;
      Locations::Goal loc;
      auto f = expect_feature();
      g.feature = f.feature;
      loc.feature = f.at;
      expect_keyword("weight");
      auto [w, wat] = expect_number("goal weight");
      g.weight = w;
      loc.weight = wat;
      doc.goals.push_back(std::move(g));
      locs.goals.push_back(loc);
    } else if (k == "query") {
      QueryDecl q;
      Locations::Query loc;
      loc.keyword = kw.at;
      expect_keyword("if");
      for (auto& f : feature_list("then")) {
        q.antecedent.push_back(f.feature);
        loc.antecedent.push_back(f.at);
      }
      expect_keyword("then");
      for (auto& f : feature_list()) {
        q.consequent.push_back(f.feature);
        loc.consequent.push_back(f.at);
      }
      if (!doc.query) doc.query = std::move(q);
      locs.queries.push_back(std::move(loc));
    } else if (k == "attention") {
      AttentionDecl a;
      Locations::Attention loc;
      loc.keyword = loc.off_gain = kw.at;
      expect_keyword("focus");
      expect(Tok::lbrace, "'{'");
      for (auto& id : id_list()) {
        a.focus.push_back(id.id);
        loc.focus.push_back(id.at);
      }
      expect(Tok::rbrace, "'}'");
      if (at_keyword("off-gain")) {
        take();
        auto [g, gat] = expect_number("off-gain value");
        a.off_gain = g;
        loc.off_gain = gat;
      }
      if (!doc.attention) doc.attention = std::move(a);
      locs.attentions.push_back(std::move(loc));
    } else if (k == "cut") {
      CutDecl c;
      Locations::Cut loc;
      auto pic = expect_id("picture id");
      c.picture = pic.id;
      loc.picture = pic.at;
      expect_keyword("part");
      auto part = expect_id("part id");
      c.part = part.id;
      loc.part = part.at;
      doc.cuts.push_back(std::move(c));
      locs.cuts.push_back(loc);
    }
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  std::vector<ParseError>& errors_;
};

// ---------------------------------------------------------------------------
// Validation

class Validator {
 public:
  Validator(const ScenarioDocument& doc, const Locations& locs, std::vector<ParseError>& errors)
      : doc_(doc), locs_(locs), errors_(errors) {}

  void run() {
    check_ids();
    check_groups();
    check_links();
    check_pictures();
    check_situations();
    check_goals();
    check_query();
    check_attention();
    check_cuts();
  }

 private:
  void add(Loc at, ParseErrorKind kind, std::string message) {
    errors_.push_back({at.line, at.column, std::move(message), kind});
  }

  bool is_group(const std::string& id) const { return groups_.contains(id); }
  bool is_picture(const std::string& id) const { return pictures_.contains(id); }

  void check_ids() {
    for (std::size_t i = 0; i < doc_.groups.size(); ++i) {
      const auto& id = doc_.groups[i].id;
      if (!groups_.emplace(id, i).second) {
        add(locs_.groups[i].id, ParseErrorKind::duplicate_id, "duplicate group id '" + id + "'");
      }
    }
    for (std::size_t i = 0; i < doc_.pictures.size(); ++i) {
      const auto& id = doc_.pictures[i].id;
      if (is_group(id)) {
        add(locs_.pictures[i].id, ParseErrorKind::duplicate_id,
            "picture id '" + id + "' is already a group");
      } else if (!pictures_.emplace(id, i).second) {
        add(locs_.pictures[i].id, ParseErrorKind::duplicate_id, "duplicate picture id '" + id + "'");
      }
    }
    for (const auto& g : doc_.groups) {
      for (const auto& f : g.features) declared_.insert(f.name);
    }
    for (const auto& p : doc_.pictures) {
      for (const auto& f : p.features) declared_.insert(f.name);
    }
  }

  void check_groups() {
    for (std::size_t i = 0; i < doc_.groups.size(); ++i) {
      const auto& g = doc_.groups[i];
      if (g.size == 0) {
        add(locs_.groups[i].size, ParseErrorKind::range, "group size must be a positive integer");
      }
      for (std::size_t j = 0; j < g.features.size(); ++j) {
        const auto& f = g.features[j];
        if (f.stance == pictures::Stance::denied &&
            std::find(g.features.begin(), g.features.end(), f.negated()) != g.features.end()) {
          add(locs_.groups[i].features[j], ParseErrorKind::arity,
              "group '" + g.id + "' both asserts and denies '" + f.name + "'");
        }
      }
    }
  }

  void check_links() {
    for (std::size_t i = 0; i < doc_.links.size(); ++i) {
      const auto& l = doc_.links[i];
      if (!is_group(l.from)) {
        add(locs_.links[i].from, ParseErrorKind::unknown_reference, "undeclared group '" + l.from + "'");
      }
      if (!is_group(l.to)) {
        add(locs_.links[i].to, ParseErrorKind::unknown_reference, "undeclared group '" + l.to + "'");
      }
      if (!(l.weight >= 0.0) || !std::isfinite(l.weight)) {
        add(locs_.links[i].weight, ParseErrorKind::range, "link weight must be finite and non-negative");
      }
    }
  }

  void check_pictures() {
    for (std::size_t i = 0; i < doc_.pictures.size(); ++i) {
      const auto& p = doc_.pictures[i];
      if (p.parts.empty()) {
        add(locs_.pictures[i].id, ParseErrorKind::arity, "picture '" + p.id + "' has no parts");
      }
      for (std::size_t j = 0; j < p.parts.size(); ++j) {
        const auto& part = p.parts[j];
        if (!is_group(part) && !is_picture(part)) {
          add(locs_.pictures[i].parts[j], ParseErrorKind::unknown_reference,
              "undeclared group or picture '" + part + "'");
        }
      }
    }
    // Parts graph must be acyclic.
    std::map<std::string, int> state;  // 1 visiting, 2 done
    std::function<bool(const std::string&)> cyclic = [&](const std::string& id) {
      auto it = pictures_.find(id);
      if (it == pictures_.end()) return false;
      int& s = state[id];
      if (s == 1) return true;
      if (s == 2) return false;
      s = 1;
      for (const auto& part : doc_.pictures[it->second].parts) {
        if (cyclic(part)) return true;
      }
      state[id] = 2;
      return false;
    };
    for (const auto& [id, index] : pictures_) {
      state.clear();
      if (cyclic(id)) {
        add(locs_.pictures[index].id, ParseErrorKind::arity, "picture '" + id + "' contains itself");
      }
    }
  }

  void check_declared(const Feature& f, Loc at) {
    if (!declared_.contains(f.name)) {
      add(at, ParseErrorKind::unknown_reference, "undeclared feature '" + f.name + "'");
    }
  }

  void check_situations() {
    std::set<std::string> cases;
    for (std::size_t i = 0; i < doc_.situations.size(); ++i) {
      const auto& s = doc_.situations[i];
      if (!cases.insert(s.case_id).second) {
        add(locs_.situations[i].case_id, ParseErrorKind::duplicate_id,
            s.case_id.empty() ? "second unnamed situation" : "duplicate case '" + s.case_id + "'");
      }
      const std::set<Feature> wanted(s.features.begin(), s.features.end());
      for (std::size_t j = 0; j < s.features.size(); ++j) {
        const auto& f = s.features[j];
        if (!declared_.contains(f.name)) {
          check_declared(f, locs_.situations[i].features[j]);
          continue;
        }
        const bool realized = std::any_of(doc_.groups.begin(), doc_.groups.end(), [&](const GroupDecl& g) {
          return std::find(g.features.begin(), g.features.end(), f) != g.features.end() &&
                 std::all_of(g.features.begin(), g.features.end(),
                             [&](const Feature& t) { return wanted.contains(t); });
        });
        if (!realized) {
          add(locs_.situations[i].features[j], ParseErrorKind::unknown_reference,
              "no group realizes '" + pictures::to_string(f) + "' within this situation");
        }
      }
    }
  }

  void check_goals() {
    std::set<Feature> seen;
    for (std::size_t i = 0; i < doc_.goals.size(); ++i) {
      const auto& g = doc_.goals[i];
      check_declared(g.feature, locs_.goals[i].feature);
      if (!seen.insert(g.feature).second) {
        add(locs_.goals[i].feature, ParseErrorKind::duplicate_id,
            "duplicate goal '" + pictures::to_string(g.feature) + "'");
      }
      if (!(g.weight >= 0.0) || !std::isfinite(g.weight)) {
        add(locs_.goals[i].weight, ParseErrorKind::range, "goal weight must be finite and non-negative");
      }
    }
  }

  void check_query() {
    for (std::size_t i = 1; i < locs_.queries.size(); ++i) {
      add(locs_.queries[i].keyword, ParseErrorKind::duplicate_id, "more than one query");
    }
    if (!doc_.query) return;
    const auto& q = *doc_.query;
    const auto& loc = locs_.queries.front();
    if (q.antecedent.empty()) add(loc.keyword, ParseErrorKind::arity, "query has no antecedent");
    if (q.consequent.empty()) add(loc.keyword, ParseErrorKind::arity, "query has no consequent");
    for (std::size_t j = 0; j < q.antecedent.size(); ++j) {
      const auto& f = q.antecedent[j];
      const bool carried = std::any_of(doc_.groups.begin(), doc_.groups.end(), [&](const GroupDecl& g) {
        return std::find(g.features.begin(), g.features.end(), f) != g.features.end();
      });
      if (!carried) {
        add(loc.antecedent[j], ParseErrorKind::unknown_reference,
            "no group carries antecedent '" + pictures::to_string(f) + "'");
      }
    }
    for (std::size_t j = 0; j < q.consequent.size(); ++j) check_declared(q.consequent[j], loc.consequent[j]);
  }

  void check_attention() {
    for (std::size_t i = 1; i < locs_.attentions.size(); ++i) {
      add(locs_.attentions[i].keyword, ParseErrorKind::duplicate_id, "more than one attention directive");
    }
    if (!doc_.attention) return;
    const auto& a = *doc_.attention;
    const auto& loc = locs_.attentions.front();
    for (std::size_t j = 0; j < a.focus.size(); ++j) {
      if (!is_group(a.focus[j]) && !is_picture(a.focus[j])) {
        add(loc.focus[j], ParseErrorKind::unknown_reference,
            "undeclared group or picture '" + a.focus[j] + "'");
      }
    }
    if (!(a.off_gain >= 0.0 && a.off_gain < 1.0)) {
      add(loc.off_gain, ParseErrorKind::range, "off-gain must lie in [0,1)");
    }
  }

  bool contains_part(const std::string& picture, const std::string& part, int depth = 0) const {
    auto it = pictures_.find(picture);
    if (it == pictures_.end() || depth > 64) return false;
    for (const auto& p : doc_.pictures[it->second].parts) {
      if (p == part || contains_part(p, part, depth + 1)) return true;
    }
    return false;
  }

  void check_cuts() {
    for (std::size_t i = 0; i < doc_.cuts.size(); ++i) {
      const auto& c = doc_.cuts[i];
      if (!is_picture(c.picture)) {
        add(locs_.cuts[i].picture, ParseErrorKind::unknown_reference,
            "undeclared picture '" + c.picture + "'");
      } else if (!contains_part(c.picture, c.part)) {
        add(locs_.cuts[i].part, ParseErrorKind::unknown_reference,
            "'" + c.part + "' is not a part of '" + c.picture + "'");
      }
    }
  }

  const ScenarioDocument& doc_;
  const Locations& locs_;
  std::vector<ParseError>& errors_;
  std::map<std::string, std::size_t> groups_;
  std::map<std::string, std::size_t> pictures_;
  std::set<std::string> declared_;
};

void sort_unique(std::vector<Feature>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

void sort_unique(std::vector<std::string>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

std::string format_number(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

std::string join_features(const std::vector<Feature>& fs, const char* sep = " ") {
  std::string out;
  for (const auto& f : fs) {
    if (!out.empty()) out += sep;
    out += pictures::to_string(f);
  }
  return out;
}

std::string join_ids(const std::vector<std::string>& ids) {
  std::string out;
  for (const auto& id : ids) {
    if (!out.empty()) out += ", ";
    out += id;
  }
  return out;
}

}  // namespace

ScenarioDocument canonical(ScenarioDocument doc) {
  for (auto& g : doc.groups) sort_unique(g.features);
  std::sort(doc.groups.begin(), doc.groups.end(),
            [](const GroupDecl& a, const GroupDecl& b) { return a.id < b.id; });
  std::sort(doc.links.begin(), doc.links.end(), [](const LinkDecl& a, const LinkDecl& b) {
    auto key = [](const LinkDecl& l) {
      return std::tuple(l.from, l.to, -static_cast<int>(l.polarity), l.weight, static_cast<int>(l.kind));
    };
    return key(a) < key(b);
  });
  for (auto& p : doc.pictures) sort_unique(p.features);
  std::sort(doc.pictures.begin(), doc.pictures.end(),
            [](const PictureDecl& a, const PictureDecl& b) { return a.id < b.id; });
  for (auto& s : doc.situations) sort_unique(s.features);
  std::sort(doc.situations.begin(), doc.situations.end(),
            [](const SituationDecl& a, const SituationDecl& b) { return a.case_id < b.case_id; });
  std::sort(doc.goals.begin(), doc.goals.end(),
            [](const GoalDecl& a, const GoalDecl& b) { return a.feature < b.feature; });
  if (doc.query) {
    sort_unique(doc.query->antecedent);
    sort_unique(doc.query->consequent);
  }
  if (doc.attention) sort_unique(doc.attention->focus);
  return doc;
}

bool structurally_equal(const ScenarioDocument& a, const ScenarioDocument& b) {
  return canonical(a) == canonical(b);
}

ScenarioDocument parse(const ScenarioSource& src) {
  std::vector<ParseError> errors;
  if (auto bad = invalid_utf8(src.text)) {
    std::size_t line = 1;
    std::size_t column = 1;
    for (std::size_t i = 0; i < *bad; ++i) {
      if (src.text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw ParseFailure(src.origin, {{line, column, "input is not valid UTF-8", ParseErrorKind::syntax}});
  }

  Locations locs;
  Parser parser(Lexer(src.text).run(), errors);
  ScenarioDocument doc = parser.parse_document(locs);
  if (errors.empty()) {
    Validator(doc, locs, errors).run();
    std::stable_sort(errors.begin(), errors.end(), [](const ParseError& a, const ParseError& b) {
      return std::tie(a.line, a.column) < std::tie(b.line, b.column);
    });
  }
  if (errors.size() > kMaxDiagnostics) errors.resize(kMaxDiagnostics);
  if (!errors.empty()) throw ParseFailure(src.origin, std::move(errors));
  return doc;
}

std::string serialize(const ScenarioDocument& input) {
  const ScenarioDocument doc = canonical(input);
  std::string out = "scenario " + quote(doc.name) + "\n";

  auto section = [&](bool nonempty) {
    if (nonempty) out += "\n";
  };

  section(!doc.groups.empty());
  for (const auto& g : doc.groups) {
    out += "group " + g.id;
    if (g.size != 1) out += " size " + std::to_string(g.size);
    if (!g.features.empty()) out += " feature " + join_features(g.features);
    out += "\n";
  }
  section(!doc.links.empty());
  for (const auto& l : doc.links) {
    out += "link " + l.from + (l.polarity == Polarity::excitatory ? " -> " : " -| ") + l.to +
           " : " + format_number(l.weight);
    if (l.kind != EdgeKind::association) out += std::string(" kind ") + substrate::to_string(l.kind);
    out += "\n";
  }
  section(!doc.pictures.empty());
  for (const auto& p : doc.pictures) {
    out += "picture " + p.id + " { parts: " + join_ids(p.parts);
    if (!p.features.empty()) out += " features: " + join_features(p.features);
    out += " }\n";
  }
  section(!doc.situations.empty());
  for (const auto& s : doc.situations) {
    out += "situation ";
    if (!s.case_id.empty()) out += "case " + s.case_id + " ";
    out += "{ " + join_features(s.features) + (s.features.empty() ? "}" : " }") + "\n";
  }
  section(!doc.goals.empty());
  for (const auto& g : doc.goals) {
    out += "goal " + pictures::to_string(g.feature) + " weight " + format_number(g.weight) + "\n";
  }
  section(doc.query.has_value() || doc.attention.has_value());
  if (doc.query) {
    out += "query if " + join_features(doc.query->antecedent) + " then " +
           join_features(doc.query->consequent) + "\n";
  }
  if (doc.attention) {
    out += "attention focus { " + join_ids(doc.attention->focus) +
           (doc.attention->focus.empty() ? "}" : " }");
    if (doc.attention->off_gain != 0.0) out += " off-gain " + format_number(doc.attention->off_gain);
    out += "\n";
  }
  section(!doc.cuts.empty());
  for (const auto& c : doc.cuts) out += "cut " + c.picture + " part " + c.part + "\n";
  return out;
}

std::vector<std::string> case_ids(const ScenarioDocument& doc) {
  std::vector<std::string> out;
  for (const auto& s : doc.situations) out.push_back(s.case_id);
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<std::string> default_case(const ScenarioDocument& doc) {
  auto ids = case_ids(doc);
  if (ids.empty()) return std::nullopt;
  return ids.front();  // the unnamed situation sorts first
}

substrate::NeuronGraph build_document_graph(const ScenarioDocument& doc,
                                            const substrate::BuildConfig& config) {
  std::vector<substrate::GroupSpec> groups;
  for (const auto& g : doc.groups) groups.push_back({g.id, g.size});
  std::vector<substrate::LinkSpec> links;
  for (const auto& l : doc.links) links.push_back({l.from, l.to, l.polarity, l.weight, l.kind});
  return substrate::build_graph(groups, links, config);
}

counterfactual::Scenario instantiate(const ScenarioDocument& doc,
                                     const std::optional<std::string>& case_id,
                                     const substrate::BuildConfig& config) {
  using pictures::Picture;
  counterfactual::Scenario s;
  s.name = doc.name;
  s.graph = build_document_graph(doc, config);

  std::map<std::string, Picture> by_id;
  for (const auto& g : doc.groups) {
    const auto members = s.graph.group(g.id);
    substrate::NeuronSet set(members.begin(), members.end());
    std::map<Feature, substrate::NeuronSet> tags;
    for (const auto& f : g.features) tags[f] = set;
    Picture leaf = pictures::make_leaf(g.id, set, std::move(tags));
    by_id.emplace(g.id, leaf);
    s.groups.push_back(std::move(leaf));
  }

  std::map<std::string, const PictureDecl*> decls;
  for (const auto& p : doc.pictures) decls.emplace(p.id, &p);
  std::function<const Picture&(const std::string&)> resolve = [&](const std::string& id) -> const Picture& {
    if (auto it = by_id.find(id); it != by_id.end()) return it->second;
    auto d = decls.find(id);
    if (d == decls.end()) throw Error(Errc::unknown_reference, "unknown picture '" + id + "'");
    std::vector<Picture> parts;
    for (const auto& part : d->second->parts) parts.push_back(resolve(part));
    Picture whole = pictures::make_whole(id, std::move(parts), d->second->features);
    pictures::validate(whole);
    return by_id.emplace(id, std::move(whole)).first->second;
  };
  for (const auto& p : doc.pictures) s.memory.push_back(resolve(p.id));

  // Situation: every group whose tags all hold in the chosen case.
  const std::optional<std::string> chosen = case_id ? case_id : default_case(doc);
  if (chosen) {
    auto it = std::find_if(doc.situations.begin(), doc.situations.end(),
                           [&](const SituationDecl& sd) { return sd.case_id == *chosen; });
    if (it == doc.situations.end()) {
      throw Error(Errc::unknown_reference, "no situation case '" + *chosen + "'");
    }
    s.case_id = *chosen;
    const std::set<Feature> facts(it->features.begin(), it->features.end());
    std::vector<Picture> parts;
    for (const auto& leaf : s.groups) {
      if (leaf.features.empty()) continue;
      const bool fits = std::all_of(leaf.features.begin(), leaf.features.end(),
                                    [&](const auto& kv) { return facts.contains(kv.first); });
      if (fits) parts.push_back(leaf);
    }
    s.situation = pictures::make_whole("situation", std::move(parts));
  } else if (case_id) {
    throw Error(Errc::unknown_reference, "scenario declares no situations");
  } else {
    s.situation.id = "situation";
  }

  if (doc.query) {
    s.query.antecedent = doc.query->antecedent;
    s.query.consequent = doc.query->consequent;
    std::vector<Picture> parts;
    for (const auto& leaf : s.groups) {
      const bool carries = std::any_of(s.query.antecedent.begin(), s.query.antecedent.end(),
                                       [&](const Feature& f) { return leaf.has(f); });
      if (carries) parts.push_back(leaf);
    }
    s.antecedent = pictures::make_whole("antecedent", std::move(parts));
  }

  for (const auto& g : doc.goals) s.goals.push_back({g.feature, g.weight});
  for (const auto& c : doc.cuts) s.cuts.push_back({c.picture, c.part});

  if (doc.attention) {
    std::vector<Picture> catalog = s.groups;
    catalog.insert(catalog.end(), s.memory.begin(), s.memory.end());
    s.mask = pictures::focus(s.graph, catalog, doc.attention->focus, doc.attention->off_gain);
  }
  s.validated = true;
  return s;
}

ScenarioDocument with_graph_links(const ScenarioDocument& doc, const substrate::NeuronGraph& graph) {
  ScenarioDocument out = doc;
  out.links.clear();
  for (const auto& from : doc.groups) {
    for (const auto& to : doc.groups) {
      if (from.id == to.id) continue;
      const auto a = graph.group(from.id);
      const auto b = graph.group(to.id);
      for (auto polarity : {Polarity::excitatory, Polarity::inhibitory}) {
        double sum = 0.0;
        std::optional<EdgeKind> kind;
        for (auto x : a) {
          for (auto y : b) {
            if (const auto* syn = graph.find({x, y, polarity})) {
              sum += syn->weight;
              if (!kind) kind = syn->kind;
            }
          }
        }
        if (kind) {
          out.links.push_back({from.id, to.id, polarity, sum / static_cast<double>(b.size()), *kind});
        }
      }
    }
  }
  return out;
}

std::vector<learning::Episode> parse_episodes(const ScenarioSource& src, const ScenarioDocument& doc) {
  std::set<std::string> groups;
  for (const auto& g : doc.groups) groups.insert(g.id);

  std::vector<learning::Episode> episodes;
  std::vector<ParseError> errors;
  auto add = [&](Loc at, ParseErrorKind kind, std::string message) {
    if (errors.size() < kMaxDiagnostics) errors.push_back({at.line, at.column, std::move(message), kind});
  };

  if (auto bad = invalid_utf8(src.text)) {
    throw ParseFailure(src.origin, {{1, *bad + 1, "input is not valid UTF-8", ParseErrorKind::syntax}});
  }

  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= src.text.size()) {
    const std::size_t end = std::min(src.text.find('\n', start), src.text.size());
    ++line_no;
    const std::string_view line(src.text.data() + start, end - start);
    start = end + 1;

    const auto tokens = Lexer(line, {line_no, 1}).run();
    if (tokens.front().kind == Tok::end) continue;

    std::size_t i = 0;
    auto at = [&]() -> const Token& { return tokens[std::min(i, tokens.size() - 1)]; };
    if (at().kind != Tok::ident || at().text != "co-active") {
      add(at().at, ParseErrorKind::syntax, "expected 'co-active'");
      continue;
    }
    ++i;
    if (at().kind != Tok::colon) {
      add(at().at, ParseErrorKind::syntax, "expected ':' after 'co-active'");
      continue;
    }
    ++i;
    learning::Episode e;
    bool ok = true;
    while (at().kind == Tok::ident && at().text != "duration") {
      if (!groups.contains(at().text)) {
        add(at().at, ParseErrorKind::unknown_reference, "undeclared group '" + at().text + "'");
        ok = false;
      }
      e.co_active_groups.push_back(at().text);
      ++i;
      if (at().kind == Tok::comma) ++i;
    }
    if (e.co_active_groups.empty()) {
      add(at().at, ParseErrorKind::arity, "episode names no groups");
      continue;
    }
    if (at().kind == Tok::ident && at().text == "duration") {
      ++i;
      const Token& n = at();
      std::size_t value = 0;
      auto [ptr, ec] = std::from_chars(n.text.data(), n.text.data() + n.text.size(), value);
      if (n.kind != Tok::number || ec != std::errc() || ptr != n.text.data() + n.text.size() || value == 0) {
        add(n.at, ParseErrorKind::range, "duration must be a positive integer");
        continue;
      }
      e.duration = value;
      ++i;
    }
    if (at().kind != Tok::end) {
      add(at().at, ParseErrorKind::syntax, "unexpected '" + at().text + "'");
      continue;
    }
    if (ok) episodes.push_back(std::move(e));
  }
  if (!errors.empty()) throw ParseFailure(src.origin, std::move(errors));
  return episodes;
}

}  // namespace presem::dsl
