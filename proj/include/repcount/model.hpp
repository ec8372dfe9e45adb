#pragma once

#include <algorithm>
#include <compare>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "repcount/numeric.hpp"

namespace repcount {

/// A relation name with its ordered, distinct attribute names.
struct RelationDecl {
  std::string name;
  std::vector<std::string> attributes;

  RelationDecl() = default;
  RelationDecl(std::string n, std::vector<std::string> attrs)
      : name(std::move(n)), attributes(std::move(attrs)) {
    if (attributes.empty()) throw Error("relation " + name + " must have at least one attribute");
    std::set<std::string> seen;
    for (const auto& a : attributes)
      if (!seen.insert(a).second)
        throw Error("relation " + name + ": duplicate attribute " + a);
  }

  std::size_t arity() const { return attributes.size(); }

  bool has_attribute(const std::string& a) const {
    return std::find(attributes.begin(), attributes.end(), a) != attributes.end();
  }

  std::size_t attribute_index(const std::string& a) const {
    auto it = std::find(attributes.begin(), attributes.end(), a);
    if (it == attributes.end()) throw Error("relation " + name + ": unknown attribute " + a);
    return static_cast<std::size_t>(it - attributes.begin());
  }

  bool operator==(const RelationDecl&) const = default;
};

class Schema {
 public:
  void add(RelationDecl decl) {
    auto [it, inserted] = rels_.emplace(decl.name, std::move(decl));
    if (!inserted) throw Error("relation " + it->first + " declared twice");
  }

  bool has(const std::string& name) const { return rels_.count(name) > 0; }

  const RelationDecl& at(const std::string& name) const {
    auto it = rels_.find(name);
    if (it == rels_.end()) throw Error("unknown relation " + name);
    return it->second;
  }

  const std::map<std::string, RelationDecl>& relations() const { return rels_; }
  std::size_t size() const { return rels_.size(); }
  bool operator==(const Schema&) const = default;

 private:
  std::map<std::string, RelationDecl> rels_;
};

struct Fact {
  std::string relation;
  std::vector<std::string> values;

  Fact() = default;
  Fact(std::string rel, std::vector<std::string> vals)
      : relation(std::move(rel)), values(std::move(vals)) {}

  auto operator<=>(const Fact&) const = default;
};

/// Finite set of facts over a schema. Facts are kept sorted and unique so
/// every traversal is deterministic.
class Database {
 public:
  Database() : schema_(std::make_shared<Schema>()) {}
  explicit Database(Schema schema) : schema_(std::make_shared<Schema>(std::move(schema))) {}
  Database(Schema schema, std::vector<Fact> facts) : Database(std::move(schema)) {
    for (auto& f : facts) insert(std::move(f));
  }

  const Schema& schema() const { return *schema_; }
  const std::vector<Fact>& facts() const { return facts_; }
  std::size_t size() const { return facts_.size(); }
  bool empty() const { return facts_.empty(); }

  void insert(Fact f) {
    const RelationDecl& decl = schema_->at(f.relation);
    if (f.values.size() != decl.arity())
      throw Error("fact over " + f.relation + " has arity " + std::to_string(f.values.size()) +
                  ", declared " + std::to_string(decl.arity()));
    auto it = std::lower_bound(facts_.begin(), facts_.end(), f);
    if (it != facts_.end() && *it == f) return;  // set semantics
    facts_.insert(it, std::move(f));
  }

  bool contains(const Fact& f) const {
    return std::binary_search(facts_.begin(), facts_.end(), f);
  }

  bool contains_all(const std::vector<Fact>& fs) const {
    for (const auto& f : fs)
      if (!contains(f)) return false;
    return true;
  }

  std::vector<Fact> facts_of(const std::string& relation) const {
    std::vector<Fact> out;
    for (const auto& f : facts_)
      if (f.relation == relation) out.push_back(f);
    return out;
  }

  /// D_R as a database sharing this schema.
  Database restrict_to(const std::string& relation) const {
    Database d = like_this();
    d.facts_ = facts_of(relation);
    return d;
  }

  /// D minus a fact set (facts absent from D are ignored).
  Database without(const std::vector<Fact>& remove) const {
    std::vector<Fact> rem = remove;
    std::sort(rem.begin(), rem.end());
    Database d = like_this();
    std::set_difference(facts_.begin(), facts_.end(), rem.begin(), rem.end(),
                        std::back_inserter(d.facts_));
    return d;
  }

  /// Copy of this database with the given facts added.
  Database with_facts(std::vector<Fact> facts) const {
    Database d = *this;
    for (auto& f : facts) d.insert(std::move(f));
    return d;
  }

  /// Empty database over the same schema.
  Database empty_like() const { return like_this(); }

  /// Sorted set of constants occurring in the database.
  std::vector<std::string> active_domain() const {
    std::set<std::string> dom;
    for (const auto& f : facts_) dom.insert(f.values.begin(), f.values.end());
    return {dom.begin(), dom.end()};
  }

  bool operator==(const Database& other) const { return facts_ == other.facts_; }
  bool operator<(const Database& other) const { return facts_ < other.facts_; }

 private:
  Database like_this() const {
    Database d;
    d.schema_ = schema_;
    return d;
  }

  std::shared_ptr<const Schema> schema_;
  std::vector<Fact> facts_;  // sorted, unique
};

struct Term {
  enum class Kind { Constant, Variable };
  Kind kind = Kind::Constant;
  std::string text;

  static Term constant(std::string c) { return {Kind::Constant, std::move(c)}; }
  static Term variable(std::string v) { return {Kind::Variable, std::move(v)}; }

  bool is_constant() const { return kind == Kind::Constant; }
  bool is_variable() const { return kind == Kind::Variable; }

  auto operator<=>(const Term&) const = default;
};

struct Atom {
  std::string relation;
  std::vector<Term> terms;

  Atom() = default;
  Atom(std::string rel, std::vector<Term> ts) : relation(std::move(rel)), terms(std::move(ts)) {}

  auto operator<=>(const Atom&) const = default;
};

/// Boolean conjunctive query, kept as an ordered list of atoms. Queries with
/// answer variables are grounded before they reach this type.
class ConjunctiveQuery {
 public:
  explicit ConjunctiveQuery(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
    if (atoms_.empty()) throw Error("conjunctive query must have at least one atom");
  }

  const std::vector<Atom>& atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }

  bool self_join_free() const {
    std::set<std::string> rels;
    for (const auto& a : atoms_)
      if (!rels.insert(a.relation).second) return false;
    return true;
  }

  std::vector<std::string> relations() const {
    std::set<std::string> rels;
    for (const auto& a : atoms_) rels.insert(a.relation);
    return {rels.begin(), rels.end()};
  }

  /// The unique R-atom of a self-join-free query; nullptr if R is absent.
  const Atom* atom_for(const std::string& relation) const {
    const Atom* found = nullptr;
    for (const auto& a : atoms_) {
      if (a.relation != relation) continue;
      if (found) throw Error("query has a self-join over " + relation);
      found = &a;
    }
    return found;
  }

  std::vector<std::string> variables() const {
    std::set<std::string> vars;
    for (const auto& a : atoms_)
      for (const auto& t : a.terms)
        if (t.is_variable()) vars.insert(t.text);
    return {vars.begin(), vars.end()};
  }

  std::vector<std::string> constants() const {
    std::set<std::string> cs;
    for (const auto& a : atoms_)
      for (const auto& t : a.terms)
        if (t.is_constant()) cs.insert(t.text);
    return {cs.begin(), cs.end()};
  }

  /// Variables occurring more than once in the query (liaison variables).
  std::vector<std::string> liaison_variables() const {
    std::map<std::string, int> count;
    for (const auto& a : atoms_)
      for (const auto& t : a.terms)
        if (t.is_variable()) ++count[t.text];
    std::vector<std::string> out;
    for (const auto& [v, n] : count)
      if (n > 1) out.push_back(v);
    return out;
  }

  bool operator==(const ConjunctiveQuery&) const = default;

 private:
  std::vector<Atom> atoms_;
};

/// Variable-to-constant assignment.
using Substitution = std::map<std::string, std::string>;

inline ConjunctiveQuery substitute(const ConjunctiveQuery& q, const std::string& var,
                                   const std::string& constant) {
  std::vector<Atom> atoms = q.atoms();
  for (auto& a : atoms)
    for (auto& t : a.terms)
      if (t.is_variable() && t.text == var) t = Term::constant(constant);
  return ConjunctiveQuery(std::move(atoms));
}

inline ConjunctiveQuery substitute_all(const ConjunctiveQuery& q, const Substitution& h) {
  std::vector<Atom> atoms = q.atoms();
  for (auto& a : atoms)
    for (auto& t : a.terms) {
      if (!t.is_variable()) continue;
      auto it = h.find(t.text);
      if (it != h.end()) t = Term::constant(it->second);
    }
  return ConjunctiveQuery(std::move(atoms));
}

/// All homomorphisms from Q to D, sorted lexicographically on the variable
/// bindings. Relations of Q must be declared in D's schema.
inline std::vector<Substitution> enumerate_homomorphisms(const ConjunctiveQuery& q,
                                                         const Database& d) {
  for (const Atom& a : q.atoms()) {
    const RelationDecl& decl = d.schema().at(a.relation);
    if (decl.arity() != a.terms.size())
      throw Error("atom over " + a.relation + " has arity " + std::to_string(a.terms.size()) +
                  ", declared " + std::to_string(decl.arity()));
  }

  std::map<std::string, std::vector<const Fact*>> by_rel;
  for (const Fact& f : d.facts()) by_rel[f.relation].push_back(&f);

  std::vector<Substitution> out;
  Substitution binding;

  auto match_atom = [&](const Atom& atom, const Fact& fact, std::vector<std::string>& bound) {
    for (std::size_t i = 0; i < atom.terms.size(); ++i) {
      const Term& t = atom.terms[i];
      const std::string& v = fact.values[i];
      if (t.is_constant()) {
        if (t.text != v) return false;
      } else {
        auto it = binding.find(t.text);
        if (it == binding.end()) {
          binding.emplace(t.text, v);
          bound.push_back(t.text);
        } else if (it->second != v) {
          return false;
        }
      }
    }
    return true;
  };

  auto search = [&](auto&& self, std::size_t atom_idx) -> void {
    if (atom_idx == q.atoms().size()) {
      out.push_back(binding);
      return;
    }
    const Atom& atom = q.atoms()[atom_idx];
    auto it = by_rel.find(atom.relation);
    if (it == by_rel.end()) return;
    for (const Fact* f : it->second) {
      std::vector<std::string> bound;
      if (match_atom(atom, *f, bound)) self(self, atom_idx + 1);
      for (const auto& v : bound) binding.erase(v);
    }
  };
  search(search, 0);

  std::sort(out.begin(), out.end());
  return out;
}

inline bool entails(const Database& d, const ConjunctiveQuery& q) {
  return !enumerate_homomorphisms(q, d).empty();
}

/// The homomorphic image h(Q) as a sorted fact set. All variables of Q must
/// be bound by h.
inline std::vector<Fact> hom_image(const ConjunctiveQuery& q, const Substitution& h) {
  std::set<Fact> image;
  for (const Atom& a : q.atoms()) {
    std::vector<std::string> values;
    values.reserve(a.terms.size());
    for (const Term& t : a.terms) {
      if (t.is_constant()) {
        values.push_back(t.text);
      } else {
        auto it = h.find(t.text);
        if (it == h.end()) throw Error("hom_image: unbound variable " + t.text);
        values.push_back(it->second);
      }
    }
    image.emplace(a.relation, std::move(values));
  }
  return {image.begin(), image.end()};
}

}  // namespace repcount
