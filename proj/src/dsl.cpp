#include "shieldc/dsl.hpp"

#include <cctype>
#include <set>

namespace shieldc {

namespace set {
namespace {
SetExprPtr make(SetExpr e) { return std::make_shared<const SetExpr>(std::move(e)); }
SetExprPtr binary(SetExpr::Kind k, SetExprPtr l, SetExprPtr r) {
  SetExpr e;
  e.kind = k;
  e.lhs = std::move(l);
  e.rhs = std::move(r);
  return make(std::move(e));
}
}  // namespace

SetExprPtr named(std::string name) {
  SetExpr e;
  e.kind = SetExpr::Kind::NamedRef;
  e.name = std::move(name);
  return make(std::move(e));
}
SetExprPtr literal(std::vector<StateLiteral> states) {
  SetExpr e;
  e.kind = SetExpr::Kind::Literal;
  e.states = std::move(states);
  return make(std::move(e));
}
SetExprPtr all() { return make(SetExpr{}); }
SetExprPtr safe() {
  SetExpr e;
  e.kind = SetExpr::Kind::Safe;
  return make(std::move(e));
}
SetExprPtr obs(int agent, std::string observation) {
  SetExpr e;
  e.kind = SetExpr::Kind::Obs;
  e.agent = agent;
  e.observation = std::move(observation);
  return make(std::move(e));
}
SetExprPtr unite(SetExprPtr l, SetExprPtr r) { return binary(SetExpr::Kind::Union, std::move(l), std::move(r)); }
SetExprPtr intersect(SetExprPtr l, SetExprPtr r) {
  return binary(SetExpr::Kind::Intersection, std::move(l), std::move(r));
}
SetExprPtr minus(SetExprPtr l, SetExprPtr r) {
  return binary(SetExpr::Kind::Difference, std::move(l), std::move(r));
}
SetExprPtr complement(SetExprPtr e) {
  SetExpr c;
  c.kind = SetExpr::Kind::Complement;
  c.lhs = std::move(e);
  return make(std::move(c));
}
}  // namespace set

namespace term {
namespace {
TermPtr make(Term t) { return std::make_shared<const Term>(std::move(t)); }
}  // namespace

TermPtr idle() { return make(Term{}); }
TermPtr fail() {
  Term t;
  t.kind = Term::Kind::Fail;
  return make(std::move(t));
}
TermPtr mu(std::string var, TermPtr body) {
  Term t;
  t.kind = Term::Kind::Mu;
  t.name = std::move(var);
  t.left = std::move(body);
  return make(std::move(t));
}
TermPtr var(std::string name) {
  Term t;
  t.kind = Term::Kind::Var;
  t.name = std::move(name);
  return make(std::move(t));
}
TermPtr prefix(SetExprPtr shield, TermPtr cont) {
  Term t;
  t.kind = Term::Kind::Prefix;
  t.set = std::move(shield);
  t.left = std::move(cont);
  return make(std::move(t));
}
TermPtr choice(TermPtr left, SetExprPtr guard, TermPtr right) {
  Term t;
  t.kind = Term::Kind::Choice;
  t.set = std::move(guard);
  t.left = std::move(left);
  t.right = std::move(right);
  return make(std::move(t));
}
}  // namespace term

const SetExpr* ShieldSpec::binding(std::string_view n) const {
  for (const auto& [name, expr] : bindings)
    if (name == n) return expr.get();
  return nullptr;
}

// ---------------------------------------------------------------------------
// Lexer

namespace {

enum class Tok { Ident, Int, String, Punct, End };

struct Token {
  Tok type;
  std::string text;
  int line;
  int col;
};

const std::set<std::string, std::less<>> kKeywords = {"let", "process", "idle", "fail", "mu", "ALL", "SAFE", "OBS"};

std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  int line = 1;
  int col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++i;
    }
  };
  while (i < src.size()) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if (c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    const int tl = line;
    const int tc = col;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_' || src[j] == '\''))
        ++j;
      out.push_back({Tok::Ident, std::string(src.substr(i, j - i)), tl, tc});
      advance(j - i);
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '-' && i + 1 < src.size() && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
      std::size_t j = i + 1;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      out.push_back({Tok::Int, std::string(src.substr(i, j - i)), tl, tc});
      advance(j - i);
      continue;
    }
    if (c == '"') {
      std::size_t j = i + 1;
      while (j < src.size() && src[j] != '"' && src[j] != '\n') ++j;
      if (j >= src.size() || src[j] != '"') throw SyntaxError(tl, tc, "closing '\"'", "end of line");
      out.push_back({Tok::String, std::string(src.substr(i + 1, j - i - 1)), tl, tc});
      advance(j + 1 - i);
      continue;
    }
    if (c == '|' && i + 1 < src.size() && src[i + 1] == '|') {
      out.push_back({Tok::Punct, "||", tl, tc});
      advance(2);
      continue;
    }
    if (std::string_view("(){}[],;.=|&\\!").find(c) != std::string_view::npos) {
      out.push_back({Tok::Punct, std::string(1, c), tl, tc});
      advance(1);
      continue;
    }
    throw SyntaxError(tl, tc, "a token", std::string("'") + c + "'");
  }
  out.push_back({Tok::End, "", line, col});
  return out;
}

// ---------------------------------------------------------------------------
// Parser

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  ShieldSpec document() {
    ShieldSpec spec;
    std::set<std::string> names;
    while (is_ident("let")) {
      const Token& kw = next();
      std::string name = ident("binding name");
      expect("=");
      SetExprPtr e = set_expr();
      expect(";");
      if (!names.insert(name).second)
        throw Error(ErrorKind::DuplicateBinding, std::to_string(kw.line) + ":" + std::to_string(kw.col) +
                                                     ": duplicate binding '" + name + "'");
      spec.bindings.emplace_back(std::move(name), std::move(e));
    }
    if (!is_ident("process")) fail("'let' or 'process'");
    next();
    spec.name = ident("process name");
    expect("=");
    spec.root = term();
    expect(";");
    if (peek().type != Tok::End) fail("end of document");
    return spec;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  const Token& next() { return toks_[pos_++]; }
  bool is_punct(std::string_view p) const { return peek().type == Tok::Punct && peek().text == p; }
  bool is_ident(std::string_view w) const { return peek().type == Tok::Ident && peek().text == w; }

  [[noreturn]] void fail(const std::string& expected) const {
    const Token& t = peek();
    std::string found = t.type == Tok::End ? "end of input" : "'" + t.text + "'";
    throw SyntaxError(t.line, t.col, expected, found);
  }

  void expect(std::string_view p) {
    if (!is_punct(p)) fail("'" + std::string(p) + "'");
    next();
  }

  std::string ident(const std::string& what) {
    if (peek().type != Tok::Ident || kKeywords.count(peek().text) != 0) fail(what);
    return next().text;
  }

  int integer() {
    if (peek().type != Tok::Int) fail("integer");
    return std::stoi(next().text);
  }

  // term := idle | fail | mu X . term | X | set . term | ( term ||[ set ] term )
  TermPtr term() {
    if (is_ident("idle")) {
      next();
      return term::idle();
    }
    if (is_ident("fail")) {
      next();
      return term::fail();
    }
    if (is_ident("mu")) {
      next();
      std::string v = ident("recursion variable");
      expect(".");
      return term::mu(std::move(v), term());
    }
    if (is_punct("(") || (peek().type == Tok::Ident && kKeywords.count(peek().text) == 0)) {
      // Either a prefix whose shield starts with '(' or a name, or the
      // alternative form; try the prefix reading first.
      const std::size_t save = pos_;
      std::optional<SyntaxError> prefix_err;
      try {
        SetExprPtr s = set_expr();
        if (is_punct(".")) {
          next();
          return term::prefix(std::move(s), term());
        }
        fail("'.'");
      } catch (const SyntaxError& e) {
        prefix_err = e;
      }
      const std::size_t prefix_reach = pos_;
      pos_ = save;
      if (is_punct("(")) {
        try {
          next();
          TermPtr l = term();
          expect("||");
          expect("[");
          SetExprPtr g = set_expr();
          expect("]");
          TermPtr r = term();
          expect(")");
          return term::choice(std::move(l), std::move(g), std::move(r));
        } catch (const SyntaxError& e) {
          if (pos_ >= prefix_reach) throw;
          throw *prefix_err;
        }
      }
      // A bare identifier not followed by '.' is a recursion variable.
      return term::var(next().text);
    }
    if (is_ident("ALL") || is_ident("SAFE") || is_ident("OBS") || is_punct("{") || is_punct("!")) {
      SetExprPtr s = set_expr();
      expect(".");
      return term::prefix(std::move(s), term());
    }
    fail("a process term");
  }

  // Precedence: ! > & > \ > |, binary operators left-associative.
  SetExprPtr set_expr() {
    SetExprPtr l = set_diff();
    while (is_punct("|")) {
      next();
      l = set::unite(std::move(l), set_diff());
    }
    return l;
  }
  SetExprPtr set_diff() {
    SetExprPtr l = set_inter();
    while (is_punct("\\")) {
      next();
      l = set::minus(std::move(l), set_inter());
    }
    return l;
  }
  SetExprPtr set_inter() {
    SetExprPtr l = set_unary();
    while (is_punct("&")) {
      next();
      l = set::intersect(std::move(l), set_unary());
    }
    return l;
  }
  SetExprPtr set_unary() {
    if (is_punct("!")) {
      next();
      return set::complement(set_unary());
    }
    return set_primary();
  }
  SetExprPtr set_primary() {
    if (is_ident("ALL")) {
      next();
      return set::all();
    }
    if (is_ident("SAFE")) {
      next();
      return set::safe();
    }
    if (is_ident("OBS")) {
      next();
      expect("(");
      int agent = integer();
      expect(",");
      if (peek().type != Tok::String) fail("observation literal");
      std::string o = next().text;
      expect(")");
      return set::obs(agent, std::move(o));
    }
    if (is_punct("{")) {
      next();
      std::vector<StateLiteral> states;
      if (!is_punct("}")) {
        states.push_back(state_literal());
        while (is_punct(",")) {
          next();
          states.push_back(state_literal());
        }
      }
      expect("}");
      return set::literal(std::move(states));
    }
    if (is_punct("(")) {
      next();
      SetExprPtr e = set_expr();
      expect(")");
      return e;
    }
    if (peek().type == Tok::Ident && kKeywords.count(peek().text) == 0) return set::named(next().text);
    fail("a state-set expression");
  }

  StateLiteral state_literal() {
    expect("(");
    StateLiteral lit;
    lit.push_back(cell());
    while (is_punct(",")) {
      next();
      lit.push_back(cell());
    }
    expect(")");
    return lit;
  }
  Cell cell() {
    expect("(");
    int c = integer();
    expect(",");
    int r = integer();
    expect(")");
    return {c, r};
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// Printer

int precedence(const SetExpr& e) {
  switch (e.kind) {
    case SetExpr::Kind::Union: return 1;
    case SetExpr::Kind::Difference: return 2;
    case SetExpr::Kind::Intersection: return 3;
    case SetExpr::Kind::Complement: return 4;
    default: return 5;
  }
}

std::string wrap(const SetExpr& e, bool parens) { return parens ? "(" + print_set(e) + ")" : print_set(e); }

}  // namespace

ShieldSpec parse_spec(std::string_view text) { return Parser(tokenize(text)).document(); }

std::string print_set(const SetExpr& e) {
  switch (e.kind) {
    case SetExpr::Kind::NamedRef: return e.name;
    case SetExpr::Kind::All: return "ALL";
    case SetExpr::Kind::Safe: return "SAFE";
    case SetExpr::Kind::Obs: return "OBS(" + std::to_string(e.agent) + ",\"" + e.observation + "\")";
    case SetExpr::Kind::Literal: {
      std::string out = "{";
      for (std::size_t k = 0; k < e.states.size(); ++k) {
        if (k > 0) out += ",";
        out += "(";
        for (std::size_t i = 0; i < e.states[k].size(); ++i) {
          if (i > 0) out += ",";
          out += "(" + std::to_string(e.states[k][i].col) + "," + std::to_string(e.states[k][i].row) + ")";
        }
        out += ")";
      }
      return out + "}";
    }
    case SetExpr::Kind::Complement: return "!" + wrap(*e.lhs, precedence(*e.lhs) < 4);
    case SetExpr::Kind::Union:
    case SetExpr::Kind::Intersection:
    case SetExpr::Kind::Difference: {
      const int p = precedence(e);
      const char* op = e.kind == SetExpr::Kind::Union ? " | " : e.kind == SetExpr::Kind::Intersection ? " & " : " \\ ";
      return wrap(*e.lhs, precedence(*e.lhs) < p) + op + wrap(*e.rhs, precedence(*e.rhs) <= p);
    }
  }
  return {};
}

std::string print_term(const Term& t) {
  switch (t.kind) {
    case Term::Kind::Idle: return "idle";
    case Term::Kind::Fail: return "fail";
    case Term::Kind::Mu: return "mu " + t.name + "." + print_term(*t.left);
    case Term::Kind::Var: return t.name;
    case Term::Kind::Prefix: return print_set(*t.set) + "." + print_term(*t.left);
    case Term::Kind::Choice:
      return "(" + print_term(*t.left) + " ||[" + print_set(*t.set) + "] " + print_term(*t.right) + ")";
  }
  return {};
}

std::string print_spec(const ShieldSpec& spec) {
  std::string out;
  for (const auto& [name, e] : spec.bindings) out += "let " + name + " = " + print_set(*e) + ";\n";
  out += "process " + spec.name + " = " + print_term(*spec.root) + ";\n";
  return out;
}

bool structurally_equal(const SetExpr& a, const SetExpr& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case SetExpr::Kind::NamedRef: return a.name == b.name;
    case SetExpr::Kind::Literal: return a.states == b.states;
    case SetExpr::Kind::All:
    case SetExpr::Kind::Safe: return true;
    case SetExpr::Kind::Obs: return a.agent == b.agent && a.observation == b.observation;
    case SetExpr::Kind::Complement: return structurally_equal(*a.lhs, *b.lhs);
    default: return structurally_equal(*a.lhs, *b.lhs) && structurally_equal(*a.rhs, *b.rhs);
  }
}

bool structurally_equal(const Term& a, const Term& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Term::Kind::Idle:
    case Term::Kind::Fail: return true;
    case Term::Kind::Var: return a.name == b.name;
    case Term::Kind::Mu: return a.name == b.name && structurally_equal(*a.left, *b.left);
    case Term::Kind::Prefix: return structurally_equal(*a.set, *b.set) && structurally_equal(*a.left, *b.left);
    case Term::Kind::Choice:
      return structurally_equal(*a.set, *b.set) && structurally_equal(*a.left, *b.left) &&
             structurally_equal(*a.right, *b.right);
  }
  return false;
}

bool structurally_equal(const ShieldSpec& a, const ShieldSpec& b) {
  if (a.name != b.name || a.bindings.size() != b.bindings.size()) return false;
  for (std::size_t k = 0; k < a.bindings.size(); ++k)
    if (a.bindings[k].first != b.bindings[k].first ||
        !structurally_equal(*a.bindings[k].second, *b.bindings[k].second))
      return false;
  return structurally_equal(*a.root, *b.root);
}

// ---------------------------------------------------------------------------
// Well-formedness

std::string Violation::message() const {
  switch (kind) {
    case ErrorKind::UnboundVariable: return "unbound recursion variable '" + name + "' at " + path;
    case ErrorKind::UnguardedRecursion: return "unguarded recursion on '" + name + "' at " + path;
    case ErrorKind::UnboundSetName: return "unbound set name '" + name + "' at " + path;
    default: return std::string(to_string(kind)) + " '" + name + "' at " + path;
  }
}

namespace {

struct Scope {
  std::string var;
  bool guarded;
};

class WellformedChecker {
 public:
  explicit WellformedChecker(ValidationReport& report) : report_(report) {}

  void check_set(const SetExpr& e, const std::set<std::string>& bound, const std::string& path) {
    switch (e.kind) {
      case SetExpr::Kind::NamedRef:
        if (bound.count(e.name) == 0) report_.violations.push_back({ErrorKind::UnboundSetName, e.name, path});
        break;
      case SetExpr::Kind::Complement: check_set(*e.lhs, bound, path); break;
      case SetExpr::Kind::Union:
      case SetExpr::Kind::Intersection:
      case SetExpr::Kind::Difference:
        check_set(*e.lhs, bound, path);
        check_set(*e.rhs, bound, path);
        break;
      default: break;
    }
  }

  void check_term(const Term& t, std::vector<Scope> scopes, const std::set<std::string>& bound,
                  const std::string& path) {
    switch (t.kind) {
      case Term::Kind::Idle:
      case Term::Kind::Fail: return;
      case Term::Kind::Var: {
        auto it = std::find_if(scopes.rbegin(), scopes.rend(), [&](const Scope& s) { return s.var == t.name; });
        if (it == scopes.rend())
          report_.violations.push_back({ErrorKind::UnboundVariable, t.name, path});
        else if (!it->guarded)
          report_.violations.push_back({ErrorKind::UnguardedRecursion, t.name, path});
        return;
      }
      case Term::Kind::Mu:
        scopes.push_back({t.name, false});
        check_term(*t.left, std::move(scopes), bound, path + "/mu " + t.name);
        return;
      case Term::Kind::Prefix:
        check_set(*t.set, bound, path + "/prefix");
        for (auto& s : scopes) s.guarded = true;
        check_term(*t.left, std::move(scopes), bound, path + "/prefix");
        return;
      case Term::Kind::Choice:
        check_set(*t.set, bound, path + "/guard");
        check_term(*t.left, scopes, bound, path + "/left");
        check_term(*t.right, std::move(scopes), bound, path + "/right");
        return;
    }
  }

 private:
  ValidationReport& report_;
};

}  // namespace

ValidationReport check_wellformed(const ShieldSpec& spec) {
  ValidationReport report;
  WellformedChecker checker(report);
  std::set<std::string> bound;
  for (const auto& [name, e] : spec.bindings) {
    checker.check_set(*e, bound, "let " + name);
    bound.insert(name);
  }
  if (spec.root) checker.check_term(*spec.root, {}, bound, spec.name);
  return report;
}

void require_wellformed(const ShieldSpec& spec) {
  auto report = check_wellformed(spec);
  if (!report.ok()) throw Error(report.violations.front().kind, report.violations.front().message());
}

// ---------------------------------------------------------------------------
// Set semantics

StateSet eval_set(const SetExpr& e, const Environment& env, const std::map<std::string, StateSet>& bound) {
  const std::size_t n = env.num_states();
  switch (e.kind) {
    case SetExpr::Kind::NamedRef: {
      auto it = bound.find(e.name);
      if (it == bound.end()) throw Error(ErrorKind::UnboundSetName, "unbound set name '" + e.name + "'");
      return it->second;
    }
    case SetExpr::Kind::All: return StateSet::full(n);
    case SetExpr::Kind::Safe: return env.safe_set();
    case SetExpr::Kind::Literal: {
      StateSet out(n);
      for (const auto& lit : e.states) {
        auto s = env.state_of(lit);
        if (!s) {
          SetExpr single;
          single.kind = SetExpr::Kind::Literal;
          single.states = {lit};
          throw Error(ErrorKind::UnknownStateLiteral, "state literal " + print_set(single) + " is not a state");
        }
        out.set(*s);
      }
      return out;
    }
    case SetExpr::Kind::Obs: {
      if (e.agent < 1 || e.agent > env.num_agents())
        throw Error(ErrorKind::InvalidAgentIndex, "OBS agent index " + std::to_string(e.agent) + " out of range");
      auto o = Observation::parse(e.observation, env.radius());
      if (!o) throw Error(ErrorKind::UnknownObservationLiteral, "malformed observation \"" + e.observation + "\"");
      auto id = env.find_obs(e.agent - 1, *o);
      if (!id) return StateSet(n);
      return env.obs_set(e.agent - 1, *id);
    }
    case SetExpr::Kind::Union: return eval_set(*e.lhs, env, bound) | eval_set(*e.rhs, env, bound);
    case SetExpr::Kind::Intersection: return eval_set(*e.lhs, env, bound) & eval_set(*e.rhs, env, bound);
    case SetExpr::Kind::Difference: return eval_set(*e.lhs, env, bound) - eval_set(*e.rhs, env, bound);
    case SetExpr::Kind::Complement: return eval_set(*e.lhs, env, bound).complement();
  }
  return StateSet(n);
}

BoundSets::BoundSets(const ShieldSpec& spec, const Environment& env) : env_(&env) {
  for (const auto& [name, e] : spec.bindings) {
    sets_[name] = eval_set(*e, env, sets_);
    order_.push_back(name);
  }
}

std::optional<std::string> BoundSets::name_of(const StateSet& s) const {
  for (const auto& name : order_)
    if (sets_.at(name) == s) return name;
  if (s.all()) return std::string("S");
  if (s.none()) return std::string("∅");
  if (s == env_->safe_set()) return std::string("SAFE");
  for (const auto& name : order_)
    if (sets_.at(name).complement() == s) return "S\\" + name;
  if (s == env_->safe_set().complement()) return std::string("S\\SAFE");
  return std::nullopt;
}

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Syntax: return "SyntaxError";
    case ErrorKind::DuplicateBinding: return "DuplicateBinding";
    case ErrorKind::UnboundVariable: return "UnboundVariable";
    case ErrorKind::UnguardedRecursion: return "UnguardedRecursion";
    case ErrorKind::UnboundSetName: return "UnboundSetName";
    case ErrorKind::UnknownStateLiteral: return "UnknownStateLiteral";
    case ErrorKind::UnknownObservationLiteral: return "UnknownObservationLiteral";
    case ErrorKind::InvalidAgentIndex: return "InvalidAgentIndex";
    case ErrorKind::InvalidEnvironment: return "InvalidEnvironment";
    case ErrorKind::NonTermination: return "NonTermination";
    case ErrorKind::MismatchedShield: return "MismatchedShield";
    case ErrorKind::StateSpaceTooLarge: return "StateSpaceTooLarge";
    case ErrorKind::BinaryNotFound: return "BinaryNotFound";
    case ErrorKind::Timeout: return "Timeout";
    case ErrorKind::ParseFailure: return "ParseFailure";
    case ErrorKind::SchemaMismatch: return "SchemaMismatch";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::Io: return "Io";
  }
  return "Error";
}

}  // namespace shieldc
