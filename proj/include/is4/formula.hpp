#pragma once

// Formulas of intuitionistic modal logic: AST, concrete syntax, subformula table.

#include <cctype>
#include <compare>
#include <cstddef>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace is4 {

enum class Op : unsigned char { Bot, Atom, And, Or, Imp, Box, Dia };

class Formula {
 public:
  Formula() : Formula(bot()) {}

  static Formula bot() {
    static const Formula b{std::make_shared<const Node>(Node{Op::Bot, {}, nullptr, nullptr})};
    return b;
  }
  static Formula atom(std::string name) {
    if (name.empty()) throw std::invalid_argument("atom name must be non-empty");
    return Formula{std::make_shared<const Node>(Node{Op::Atom, std::move(name), nullptr, nullptr})};
  }
  static Formula conj(Formula a, Formula b) { return binary(Op::And, std::move(a), std::move(b)); }
  static Formula disj(Formula a, Formula b) { return binary(Op::Or, std::move(a), std::move(b)); }
  static Formula imp(Formula a, Formula b) { return binary(Op::Imp, std::move(a), std::move(b)); }
  static Formula box(Formula a) { return unary(Op::Box, std::move(a)); }
  static Formula dia(Formula a) { return unary(Op::Dia, std::move(a)); }

  Op op() const { return node_->op; }
  const std::string& name() const { return node_->name; }
  // Left (or only) operand.
  const Formula& lhs() const { return *node_->lhs; }
  const Formula& rhs() const { return *node_->rhs; }

  bool is(Op o) const { return node_->op == o; }
  bool is_binary() const { return op() == Op::And || op() == Op::Or || op() == Op::Imp; }
  bool is_modal() const { return op() == Op::Box || op() == Op::Dia; }

  std::size_t node_count() const {
    switch (op()) {
      case Op::Bot:
      case Op::Atom: return 1;
      case Op::Box:
      case Op::Dia: return 1 + lhs().node_count();
      default: return 1 + lhs().node_count() + rhs().node_count();
    }
  }

  std::size_t depth() const {
    switch (op()) {
      case Op::Bot:
      case Op::Atom: return 0;
      case Op::Box:
      case Op::Dia: return 1 + lhs().depth();
      default: return 1 + std::max(lhs().depth(), rhs().depth());
    }
  }

  friend std::strong_ordering operator<=>(const Formula& a, const Formula& b) {
    if (a.node_ == b.node_) return std::strong_ordering::equal;
    if (auto c = a.op() <=> b.op(); c != 0) return c;
    switch (a.op()) {
      case Op::Bot: return std::strong_ordering::equal;
      case Op::Atom: return a.name().compare(b.name()) <=> 0;
      case Op::Box:
      case Op::Dia: return a.lhs() <=> b.lhs();
      default:
        if (auto c = a.lhs() <=> b.lhs(); c != 0) return c;
        return a.rhs() <=> b.rhs();
    }
  }
  friend bool operator==(const Formula& a, const Formula& b) { return (a <=> b) == 0; }

 private:
  struct Node {
    Op op;
    std::string name;
    std::shared_ptr<const Formula> lhs;
    std::shared_ptr<const Formula> rhs;
  };

  explicit Formula(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

  static Formula binary(Op op, Formula a, Formula b) {
    return Formula{std::make_shared<const Node>(Node{op, {}, std::make_shared<const Formula>(std::move(a)),
                                                     std::make_shared<const Formula>(std::move(b))})};
  }
  static Formula unary(Op op, Formula a) {
    return Formula{std::make_shared<const Node>(Node{op, {}, std::make_shared<const Formula>(std::move(a)), nullptr})};
  }

  std::shared_ptr<const Node> node_;
};

// ---------------------------------------------------------------------------
// Printing

inline std::string print(const Formula& f) {
  switch (f.op()) {
    case Op::Bot: return "bot";
    case Op::Atom: return f.name();
    case Op::And: return "(" + print(f.lhs()) + " & " + print(f.rhs()) + ")";
    case Op::Or: return "(" + print(f.lhs()) + " | " + print(f.rhs()) + ")";
    case Op::Imp: return "(" + print(f.lhs()) + " -> " + print(f.rhs()) + ")";
    case Op::Box: return "box " + print(f.lhs());
    case Op::Dia: return "dia " + print(f.lhs());
  }
  return {};
}

// ---------------------------------------------------------------------------
// Parsing
//
//   imp   := disj ( "->" imp )?
//   disj  := conj ( "|" conj )*
//   conj  := unary ( "&" unary )*
//   unary := "box" unary | "dia" unary | "bot" | atom | "(" imp ")"

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t pos)
      : std::runtime_error(what + " at position " + std::to_string(pos)), pos_(pos) {}
  std::size_t position() const { return pos_; }

 private:
  std::size_t pos_;
};

namespace detail {

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Formula parse_all() {
    Formula f = parse_imp();
    skip_ws();
    if (pos_ != text_.size()) throw ParseError("unexpected trailing input '" + std::string(text_.substr(pos_, 1)) + "'", pos_);
    return f;
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool eat(std::string_view tok) {
    skip_ws();
    if (text_.substr(pos_, tok.size()) == tok) {
      pos_ += tok.size();
      return true;
    }
    return false;
  }

  static bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

  std::string ident() {
    skip_ws();
    std::size_t start = pos_;
    if (pos_ < text_.size() && std::isalpha(static_cast<unsigned char>(text_[pos_]))) {
      while (pos_ < text_.size() && ident_char(text_[pos_])) ++pos_;
    }
    return std::string(text_.substr(start, pos_ - start));
  }

  Formula parse_imp() {
    Formula lhs = parse_disj();
    if (eat("->")) return Formula::imp(std::move(lhs), parse_imp());
    return lhs;
  }

  Formula parse_disj() {
    Formula f = parse_conj();
    while (eat("|")) f = Formula::disj(std::move(f), parse_conj());
    return f;
  }

  Formula parse_conj() {
    Formula f = parse_unary();
    while (eat("&")) f = Formula::conj(std::move(f), parse_unary());
    return f;
  }

  Formula parse_unary() {
    skip_ws();
    if (pos_ >= text_.size()) throw ParseError("unexpected end of input", pos_);
    if (eat("(")) {
      Formula f = parse_imp();
      if (!eat(")")) throw ParseError("expected ')'", pos_);
      return f;
    }
    std::size_t start = pos_;
    std::string word = ident();
    if (word.empty()) throw ParseError("unexpected character '" + std::string(1, text_[pos_]) + "'", pos_);
    if (word == "box") return Formula::box(parse_unary());
    if (word == "dia") return Formula::dia(parse_unary());
    if (word == "bot") return Formula::bot();
    if (!std::islower(static_cast<unsigned char>(word[0]))) throw ParseError("atoms must start with a lowercase letter", start);
    return Formula::atom(std::move(word));
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline Formula parse(std::string_view text) { return detail::Parser(text).parse_all(); }

// Reads a corpus: one formula per line, '#' starts a comment, blank lines skipped.
inline std::vector<Formula> parse_corpus(std::string_view text) {
  std::vector<Formula> out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    std::string_view line = text.substr(start, end - start);
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    bool blank = true;
    for (char c : line) blank = blank && std::isspace(static_cast<unsigned char>(c));
    if (!blank) {
      try {
        out.push_back(parse(line));
      } catch (const ParseError& e) {
        throw ParseError("line " + std::to_string(line_no) + ": " + e.what(), e.position());
      }
    }
    start = end + 1;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Subformula table

/// Distinct subformulas of a formula, indexed densely in post-order (children
/// before parents, left before right). Every labelled formula produced during
/// proof search is a subformula of the input, so sequents store formula sets
/// as bitsets over this table.
class Subformulas {
 public:
  struct Entry {
    Formula formula;
    Op op;
    int lhs = -1;
    int rhs = -1;
  };

  explicit Subformulas(const Formula& root) {
    root_ = visit(root);
  }

  std::size_t size() const { return entries_.size(); }
  const Entry& operator[](std::size_t i) const { return entries_[i]; }
  const std::vector<Entry>& entries() const { return entries_; }
  int root() const { return root_; }

  // -1 when f is not a subformula.
  int index_of(const Formula& f) const {
    auto it = index_.find(f);
    return it == index_.end() ? -1 : it->second;
  }

  std::vector<Formula> formulas() const {
    std::vector<Formula> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.formula);
    return out;
  }

 private:
  int visit(const Formula& f) {
    if (auto it = index_.find(f); it != index_.end()) return it->second;
    Entry e{f, f.op()};
    if (f.is_binary()) {
      e.lhs = visit(f.lhs());
      e.rhs = visit(f.rhs());
    } else if (f.is_modal()) {
      e.lhs = visit(f.lhs());
    }
    int id = static_cast<int>(entries_.size());
    entries_.push_back(std::move(e));
    index_.emplace(f, id);
    return id;
  }

  std::vector<Entry> entries_;
  std::map<Formula, int> index_;
  int root_ = -1;
};

inline std::vector<Formula> subformulas(const Formula& f) { return Subformulas(f).formulas(); }

}  // namespace is4
