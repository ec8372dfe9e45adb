#pragma once

#include <algorithm>
#include <cctype>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "repcount/fd_analysis.hpp"
#include "repcount/gen.hpp"
#include "repcount/model.hpp"

namespace repcount {

struct ParseError : Error {
  int line;
  ParseError(const std::string& msg, int line_no)
      : Error("line " + std::to_string(line_no) + ": " + msg), line(line_no) {}
};

namespace detail {

inline bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
inline bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

inline bool is_identifier(const std::string& s) {
  if (s.empty() || !is_ident_start(s[0])) return false;
  return std::all_of(s.begin(), s.end(), is_word_char);
}

inline bool is_bare_value(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), is_word_char);
}

inline bool is_numeral_token(const std::string& s) {
  return !s.empty() && std::isdigit(static_cast<unsigned char>(s[0])) &&
         std::all_of(s.begin(), s.end(), is_word_char);
}

/// Character-level cursor over one line (or a whole text), tracking line
/// numbers for error reporting.
class Cursor {
 public:
  Cursor(std::string text, int line) : text_(std::move(text)), line_(line) {}

  void skip_ws() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == '\n') {
        ++line_;
        ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  bool done() {
    skip_ws();
    return pos_ >= text_.size();
  }

  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  int line() const { return line_; }

  void expect(char c) {
    skip_ws();
    if (pos_ >= text_.size() || text_[pos_] != c)
      throw ParseError(std::string("expected '") + c + "'", line_);
    ++pos_;
  }

  bool try_consume(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  bool try_consume_str(const std::string& s) {
    skip_ws();
    if (text_.compare(pos_, s.size(), s) == 0) {
      pos_ += s.size();
      return true;
    }
    return false;
  }

  std::string word() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < text_.size() && is_word_char(text_[pos_])) ++pos_;
    if (pos_ == start) throw ParseError("expected a name", line_);
    return text_.substr(start, pos_ - start);
  }

  std::string identifier() {
    skip_ws();
    int at = line_;
    std::string w = word();
    if (!is_identifier(w)) throw ParseError("'" + w + "' is not a valid identifier", at);
    return w;
  }

  std::string quoted() {
    skip_ws();
    expect('\'');
    std::size_t start = pos_;
    while (pos_ < text_.size() && text_[pos_] != '\'' && text_[pos_] != '\n') {
      if (std::iscntrl(static_cast<unsigned char>(text_[pos_])))
        throw ParseError("control character in quoted value", line_);
      ++pos_;
    }
    if (pos_ >= text_.size() || text_[pos_] != '\'')
      throw ParseError("unterminated quoted value", line_);
    std::string v = text_.substr(start, pos_ - start);
    ++pos_;
    if (v.empty()) throw ParseError("empty quoted value", line_);
    return v;
  }

  /// Fact value: bare token or quoted string.
  std::string value() {
    skip_ws();
    if (peek() == '\'') return quoted();
    int at = line_;
    std::string w = word();
    if (!is_bare_value(w)) throw ParseError("'" + w + "' is not a valid value", at);
    return w;
  }

 private:
  std::string text_;
  std::size_t pos_ = 0;
  int line_;
};

inline std::vector<std::pair<int, std::string>> logical_lines(const std::string& text) {
  std::vector<std::pair<int, std::string>> lines;
  std::istringstream in(text);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    bool in_quote = false;  // a '#' inside a quoted value is not a comment
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '\'') in_quote = !in_quote;
      if (line[i] == '#' && !in_quote) {
        line.erase(i);
        break;
      }
    }
    auto is_blank = std::all_of(line.begin(), line.end(),
                                [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
    if (!is_blank) lines.emplace_back(n, line);
  }
  return lines;
}

}  // namespace detail

struct SchemaAndFds {
  Schema schema;
  FDSet sigma;
};

/// Grammar: `relation R(A1, A2, ...)` declares a relation; `fd R: A1 A2 ->
/// B1 B2` declares a dependency; `#` starts a comment. Attributes must be
/// declared before use; duplicate declarations are errors.
inline SchemaAndFds parse_schema_fds(const std::string& text) {
  SchemaAndFds out;
  for (const auto& [line_no, line] : detail::logical_lines(text)) {
    detail::Cursor cur(line, line_no);
    std::string keyword = cur.identifier();
    if (keyword == "relation") {
      std::string name = cur.identifier();
      cur.expect('(');
      std::vector<std::string> attrs;
      if (!cur.try_consume(')')) {
        do {
          attrs.push_back(cur.identifier());
        } while (cur.try_consume(','));
        cur.expect(')');
      }
      if (!cur.done()) throw ParseError("trailing input after relation declaration", line_no);
      if (out.schema.has(name)) throw ParseError("relation " + name + " declared twice", line_no);
      try {
        out.schema.add(RelationDecl(name, std::move(attrs)));
      } catch (const Error& e) {
        throw ParseError(e.what(), line_no);
      }
    } else if (keyword == "fd") {
      std::string rel = cur.identifier();
      cur.expect(':');
      if (!out.schema.has(rel)) throw ParseError("relation " + rel + " not declared", line_no);
      const RelationDecl& decl = out.schema.at(rel);
      std::set<std::string> lhs, rhs;
      while (!cur.try_consume_str("->")) {
        std::string a = cur.identifier();
        if (!decl.has_attribute(a))
          throw ParseError("relation " + rel + " has no attribute " + a, line_no);
        lhs.insert(a);
      }
      while (!cur.done()) {
        std::string a = cur.identifier();
        if (!decl.has_attribute(a))
          throw ParseError("relation " + rel + " has no attribute " + a, line_no);
        rhs.insert(a);
      }
      out.sigma.add(FD(rel, std::move(lhs), std::move(rhs)));
    } else {
      throw ParseError("expected 'relation' or 'fd', got '" + keyword + "'", line_no);
    }
  }
  return out;
}

/// One fact per line, `R(v1, v2, ...)`; values are bare word tokens or
/// single-quoted strings; duplicates collapse (set semantics).
inline Database parse_facts(const std::string& text, const Schema& schema) {
  Database db(schema);
  for (const auto& [line_no, line] : detail::logical_lines(text)) {
    detail::Cursor cur(line, line_no);
    std::string rel = cur.identifier();
    if (!schema.has(rel)) throw ParseError("relation " + rel + " not declared", line_no);
    cur.expect('(');
    std::vector<std::string> values;
    if (!cur.try_consume(')')) {
      do {
        values.push_back(cur.value());
      } while (cur.try_consume(','));
      cur.expect(')');
    }
    if (!cur.done()) throw ParseError("trailing input after fact", line_no);
    if (values.size() != schema.at(rel).arity())
      throw ParseError("fact over " + rel + " has arity " + std::to_string(values.size()) +
                           ", declared " + std::to_string(schema.at(rel).arity()),
                       line_no);
    db.insert(Fact(rel, std::move(values)));
  }
  return db;
}

struct ParsedQuery {
  ConjunctiveQuery body;
  std::vector<std::string> answer_variables;  // empty means Boolean

  bool boolean() const { return answer_variables.empty(); }
};

/// Grammar: `Ans(x, y) :- R(x, 'c', y), S(y).` Unquoted identifiers are
/// variables; quoted tokens and numerals are constants. Answer variables
/// must occur in the body.
inline ParsedQuery parse_query(const std::string& text, const Schema& schema) {
  detail::Cursor cur(text, 1);
  cur.identifier();  // head predicate name, conventionally Ans
  cur.expect('(');
  std::vector<std::string> answer;
  if (!cur.try_consume(')')) {
    do {
      int at = cur.line();
      std::string v = cur.identifier();
      if (detail::is_numeral_token(v))
        throw ParseError("answer terms must be variables", at);
      answer.push_back(v);
    } while (cur.try_consume(','));
    cur.expect(')');
  }
  if (!cur.try_consume_str(":-")) throw ParseError("expected ':-'", cur.line());

  std::vector<Atom> atoms;
  if (cur.peek() == '.') throw ParseError("empty query body", cur.line());
  do {
    int at = cur.line();
    std::string rel = cur.identifier();
    if (!schema.has(rel)) throw ParseError("relation " + rel + " not declared", at);
    cur.expect('(');
    std::vector<Term> terms;
    if (!cur.try_consume(')')) {
      do {
        if (cur.peek() == '\'') {
          terms.push_back(Term::constant(cur.quoted()));
        } else {
          int term_line = cur.line();
          std::string w = cur.word();
          if (detail::is_numeral_token(w))
            terms.push_back(Term::constant(w));
          else if (detail::is_identifier(w))
            terms.push_back(Term::variable(w));
          else
            throw ParseError("'" + w + "' is not a valid term", term_line);
        }
      } while (cur.try_consume(','));
      cur.expect(')');
    }
    if (terms.size() != schema.at(rel).arity())
      throw ParseError("atom over " + rel + " has arity " + std::to_string(terms.size()) +
                           ", declared " + std::to_string(schema.at(rel).arity()),
                       at);
    atoms.emplace_back(rel, std::move(terms));
  } while (cur.try_consume(','));
  cur.expect('.');
  if (!cur.done()) throw ParseError("trailing input after query", cur.line());

  ConjunctiveQuery body(std::move(atoms));
  std::vector<std::string> body_vars = body.variables();
  for (const auto& v : answer)
    if (!std::binary_search(body_vars.begin(), body_vars.end(), v))
      throw ParseError("answer variable " + v + " does not occur in the body", 1);
  return ParsedQuery{std::move(body), std::move(answer)};
}

/// Grounds a query with answer variables against an answer tuple, yielding
/// the Boolean query the engine works with.
inline ConjunctiveQuery ground_query(const ParsedQuery& q, const std::vector<std::string>& answer) {
  if (answer.size() != q.answer_variables.size())
    throw Error("answer tuple has " + std::to_string(answer.size()) + " values, query has " +
                std::to_string(q.answer_variables.size()) + " answer variables");
  Substitution h;
  for (std::size_t i = 0; i < answer.size(); ++i) h[q.answer_variables[i]] = answer[i];
  return substitute_all(q.body, h);
}

/// `--answer v1,v2` tuples; items are bare tokens or quoted values.
inline std::vector<std::string> parse_answer_tuple(const std::string& text) {
  std::vector<std::string> out;
  if (text.empty()) return out;
  detail::Cursor cur(text, 1);
  do {
    out.push_back(cur.value());
  } while (cur.try_consume(','));
  if (!cur.done()) throw ParseError("trailing input after answer tuple", 1);
  return out;
}

// ---------------------------------------------------------------------------
// Printing; print/parse round-trips to an equal value.

inline std::string print_value(const std::string& v) {
  if (detail::is_bare_value(v)) return v;
  for (char c : v)
    if (c == '\'' || std::iscntrl(static_cast<unsigned char>(c)))
      throw Error("value contains characters that cannot be printed: " + v);
  return "'" + v + "'";
}

inline std::string print_schema_fds(const Schema& schema, const FDSet& sigma) {
  std::ostringstream os;
  for (const auto& [name, decl] : schema.relations()) {
    os << "relation " << name << "(";
    for (std::size_t i = 0; i < decl.attributes.size(); ++i)
      os << (i ? ", " : "") << decl.attributes[i];
    os << ")\n";
  }
  for (const FD& fd : sigma.fds()) {
    os << "fd " << fd.relation << ":";
    for (const auto& a : fd.lhs) os << " " << a;
    os << " ->";
    for (const auto& a : fd.rhs) os << " " << a;
    os << "\n";
  }
  return os.str();
}

inline std::string print_fact(const Fact& f) {
  std::ostringstream os;
  os << f.relation << "(";
  for (std::size_t i = 0; i < f.values.size(); ++i)
    os << (i ? ", " : "") << print_value(f.values[i]);
  os << ")";
  return os.str();
}

inline std::string print_facts(const Database& db) {
  std::ostringstream os;
  for (const Fact& f : db.facts()) os << print_fact(f) << "\n";
  return os.str();
}

inline std::string print_quoted(const std::string& v) {
  for (char c : v)
    if (c == '\'' || std::iscntrl(static_cast<unsigned char>(c)))
      throw Error("value contains characters that cannot be printed: " + v);
  return "'" + v + "'";
}

/// In query syntax a bare identifier reads back as a variable, so constants
/// print as numerals or quoted values.
inline std::string print_term(const Term& t) {
  if (t.is_variable()) return t.text;
  if (detail::is_numeral_token(t.text)) return t.text;
  return print_quoted(t.text);
}

inline std::string print_query(const ConjunctiveQuery& q,
                               const std::vector<std::string>& answer_variables = {}) {
  std::ostringstream os;
  os << "Ans(";
  for (std::size_t i = 0; i < answer_variables.size(); ++i)
    os << (i ? ", " : "") << answer_variables[i];
  os << ") :- ";
  const auto& atoms = q.atoms();
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    os << (i ? ", " : "") << atoms[i].relation << "(";
    for (std::size_t j = 0; j < atoms[i].terms.size(); ++j)
      os << (j ? ", " : "") << print_term(atoms[i].terms[j]);
    os << ")";
  }
  os << ".";
  return os.str();
}

/// DIMACS CNF restricted to 3-literal clauses: `c` comments, a `p cnf n m`
/// header, then clauses as nonzero literals terminated by 0.
inline Cnf3 parse_dimacs3(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  int nvars = -1, nclauses = -1;
  std::vector<std::array<Literal, 3>> clauses;
  std::vector<int> pending;
  int pending_line = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == 'c') continue;
    if (line[0] == 'p') {
      std::istringstream hs(line);
      std::string p, fmt;
      if (!(hs >> p >> fmt >> nvars >> nclauses) || fmt != "cnf")
        throw ParseError("malformed problem line", line_no);
      if (nvars < 1 || nclauses < 1) throw ParseError("empty formula", line_no);
      continue;
    }
    if (nvars < 0) throw ParseError("clause before the problem line", line_no);
    std::istringstream cs(line);
    int lit;
    while (cs >> lit) {
      if (lit == 0) {
        if (pending.size() != 3)
          throw ParseError("clause with " + std::to_string(pending.size()) +
                               " literals; exactly 3 required",
                           pending_line ? pending_line : line_no);
        clauses.push_back({Literal{std::abs(pending[0]), pending[0] > 0},
                           Literal{std::abs(pending[1]), pending[1] > 0},
                           Literal{std::abs(pending[2]), pending[2] > 0}});
        pending.clear();
        pending_line = 0;
      } else {
        if (pending.empty()) pending_line = line_no;
        pending.push_back(lit);
      }
    }
    if (!cs.eof()) throw ParseError("malformed clause literal", line_no);
  }
  if (!pending.empty()) throw ParseError("unterminated clause", pending_line);
  if (nvars < 0) throw ParseError("missing problem line", line_no ? line_no : 1);
  if (static_cast<int>(clauses.size()) != nclauses)
    throw ParseError("header declares " + std::to_string(nclauses) + " clauses, found " +
                         std::to_string(clauses.size()),
                     line_no);
  try {
    return Cnf3(nvars, std::move(clauses));
  } catch (const Error& e) {
    throw ParseError(e.what(), line_no);
  }
}

inline std::string print_dimacs3(const Cnf3& cnf) {
  std::ostringstream os;
  os << "p cnf " << cnf.num_vars << " " << cnf.num_clauses() << "\n";
  for (const auto& clause : cnf.clauses) {
    for (const Literal& lit : clause) os << (lit.positive ? lit.var : -lit.var) << " ";
    os << "0\n";
  }
  return os.str();
}

}  // namespace repcount
