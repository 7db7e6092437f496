#pragma once

// Recursive-descent parser for the task fragment
//
//   PHI  := ('G'|'F') '[' NUM ',' NUM ']' BODY
//         | 'F' '[' NUM ',' NUM ']' 'G' '[' NUM ',' NUM ']' BODY
//   BODY := '(' LIT ('and' LIT)* ')'
//   LIT  := ['not'] ATOM | ['not'] '(' ATOM ')'
//   ATOM := 'norm2(' EXPR ')' '<=' NUM | 'sqnorm(' EXPR ')' '<=' NUM
//         | EXPR '<=' NUM | EXPR '>=' NUM
//
// EXPR is affine in the state symbols x<agent> (whole agent state) and
// x<agent>_<index> (1-based component), with '[e1, e2, ...]' building vectors.

#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "stlagc/errors.hpp"
#include "stlagc/stl.hpp"

namespace stlagc {

/// State dimension per agent id; agents not listed are taken as scalar.
using AgentDimensions = std::map<int, int>;

namespace detail {

enum class Tok { number, ident, lparen, rparen, lbracket, rbracket, comma, plus, minus, star, le, ge, end };

struct Token {
  Tok kind = Tok::end;
  std::string text;
  double number = 0.0;
  std::size_t pos = 0;
};

inline std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto syntax = [&](const std::string& msg) { return ParseError(ParseError::Kind::syntax, i, msg); };
  while (i < s.size()) {
    const char ch = s[i];
    if (std::isspace(static_cast<unsigned char>(ch))) {
      ++i;
      continue;
    }
    Token t;
    t.pos = i;
    if (std::isdigit(static_cast<unsigned char>(ch)) || ch == '.') {
      const char* first = s.data() + i;
      auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), t.number);
      if (ec != std::errc()) throw syntax("malformed number");
      t.kind = Tok::number;
      t.text.assign(first, ptr);
      i += static_cast<std::size_t>(ptr - first);
    } else if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') {
      std::size_t j = i;
      while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
      t.kind = Tok::ident;
      t.text = std::string(s.substr(i, j - i));
      i = j;
    } else if (ch == '<' || ch == '>') {
      if (i + 1 >= s.size() || s[i + 1] != '=') throw syntax("expected '<=' or '>='");
      t.kind = ch == '<' ? Tok::le : Tok::ge;
      t.text = std::string(s.substr(i, 2));
      i += 2;
    } else {
      switch (ch) {
        case '(': t.kind = Tok::lparen; break;
        case ')': t.kind = Tok::rparen; break;
        case '[': t.kind = Tok::lbracket; break;
        case ']': t.kind = Tok::rbracket; break;
        case ',': t.kind = Tok::comma; break;
        case '+': t.kind = Tok::plus; break;
        case '-': t.kind = Tok::minus; break;
        case '*': t.kind = Tok::star; break;
        default: throw syntax(std::string("unexpected character '") + ch + "'");
      }
      t.text = std::string(1, ch);
      ++i;
    }
    out.push_back(std::move(t));
  }
  Token end;
  end.pos = s.size();
  out.push_back(end);
  return out;
}

/// Vector-valued affine expression  sum_r coef[ref] * x[ref] + constant.
struct Affine {
  Eigen::Index rows = 1;
  std::map<StateRef, Eigen::VectorXd> coef;
  Eigen::VectorXd constant = Eigen::VectorXd::Zero(1);

  bool is_constant() const { return coef.empty(); }
};

class Parser {
 public:
  Parser(std::string_view text, const AgentDimensions& dims) : tokens_(tokenize(text)), dims_(dims) {}

  TemporalFormula formula() {
    TemporalFormula phi;
    const Token& op = expect_ident("expected temporal operator 'G' or 'F'");
    if (op.text != "G" && op.text != "F")
      throw ParseError(ParseError::Kind::syntax, op.pos, "expected temporal operator 'G' or 'F', got '" + op.text + "'");
    phi.outer = interval();
    phi.op = op.text == "G" ? TemporalOp::always : TemporalOp::eventually;
    if (peek().kind == Tok::ident && (peek().text == "G" || peek().text == "F")) {
      const Token& second = next();
      if (op.text != "F" || second.text != "G")
        throw ParseError(ParseError::Kind::semantic, second.pos,
                         "temporal nesting outside the fragment (only F[..] G[..] is allowed)");
      phi.op = TemporalOp::eventually_always;
      phi.inner = interval();
      if (peek().kind == Tok::ident && (peek().text == "G" || peek().text == "F"))
        throw ParseError(ParseError::Kind::semantic, peek().pos, "temporal nesting outside the fragment");
    }
    phi.body = body();
    if (peek().kind != Tok::end) throw ParseError(ParseError::Kind::syntax, peek().pos, "trailing input");
    phi.agents = phi.body.agents();
    return phi;
  }

 private:
  const Token& peek(std::size_t k = 0) const { return tokens_[std::min(pos_ + k, tokens_.size() - 1)]; }
  const Token& next() { return tokens_[pos_ < tokens_.size() - 1 ? pos_++ : pos_]; }

  const Token& expect(Tok kind, const std::string& what) {
    if (peek().kind != kind) {
      const Token& t = peek();
      throw ParseError(ParseError::Kind::syntax, t.pos,
                       "expected " + what + (t.kind == Tok::end ? ", got end of input" : ", got '" + t.text + "'"));
    }
    return next();
  }

  const Token& expect_ident(const std::string& what) { return expect(Tok::ident, what); }

  double signed_number() {
    bool negative = false;
    const std::size_t at = peek().pos;
    if (peek().kind == Tok::minus) {
      next();
      negative = true;
    }
    if (peek().kind == Tok::ident && (peek().text == "inf" || peek().text == "Inf" || peek().text == "infinity"))
      throw ParseError(ParseError::Kind::semantic, at, "unbounded interval");
    const double v = expect(Tok::number, "number").number;
    return negative ? -v : v;
  }

  Interval interval() {
    const std::size_t at = expect(Tok::lbracket, "'['").pos;
    Interval iv;
    iv.lo = signed_number();
    expect(Tok::comma, "','");
    iv.hi = signed_number();
    expect(Tok::rbracket, "']'");
    if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi))
      throw ParseError(ParseError::Kind::semantic, at, "unbounded interval");
    if (iv.lo < 0.0 || iv.hi < 0.0) throw ParseError(ParseError::Kind::semantic, at, "negative interval bound");
    if (iv.lo > iv.hi) throw ParseError(ParseError::Kind::semantic, at, "interval lower bound exceeds upper bound");
    return iv;
  }

  BooleanFormula body() {
    if (peek().kind == Tok::ident && (peek().text == "G" || peek().text == "F"))
      throw ParseError(ParseError::Kind::semantic, peek().pos, "temporal nesting outside the fragment");
    expect(Tok::lparen, "'(' opening the formula body");
    std::vector<Literal> lits;
    lits.push_back(literal());
    while (peek().kind == Tok::ident && peek().text == "and") {
      next();
      lits.push_back(literal());
    }
    if (peek().kind == Tok::ident && peek().text == "or")
      throw ParseError(ParseError::Kind::semantic, peek().pos, "disjunction is outside the fragment");
    expect(Tok::rparen, "')' or 'and'");
    return BooleanFormula(std::move(lits));
  }

  Literal literal() {
    bool negated = false;
    if (peek().kind == Tok::ident && peek().text == "not") {
      next();
      negated = true;
    }
    if (peek().kind == Tok::ident && (peek().text == "G" || peek().text == "F"))
      throw ParseError(ParseError::Kind::semantic, peek().pos, "temporal nesting outside the fragment");
    if (peek().kind == Tok::lparen) {
      // either a parenthesized literal or an atom whose expression starts with '('
      const std::size_t save = pos_;
      try {
        next();
        Literal inner = literal();
        expect(Tok::rparen, "')'");
        if (negated) inner.negated = !inner.negated;
        return inner;
      } catch (const ParseError& e) {
        if (e.kind() == ParseError::Kind::semantic) throw;
        pos_ = save;
      }
    }
    Literal lit{atom(), false};
    lit.negated = negated;
    return lit;
  }

  Predicate atom() {
    const Token& head = peek();
    if (head.kind == Tok::ident && (head.text == "norm2" || head.text == "sqnorm") && peek(1).kind == Tok::lparen) {
      const bool squared = head.text == "sqnorm";
      next();
      next();
      Affine e = expr();
      expect(Tok::rparen, "')'");
      const std::size_t at = peek().pos;
      if (peek().kind == Tok::ge)
        throw ParseError(ParseError::Kind::semantic, at,
                         "norm constraints must be upper bounds (write 'not norm2(..) <= d' for the complement)");
      expect(Tok::le, "'<='");
      const double d = signed_number();
      require_symbols(e, head.pos);
      auto [sel, S, c] = projection(e);
      if (squared)
        return Predicate::concave_quadratic(std::move(sel), std::move(S), std::move(c),
                                            Eigen::MatrixXd::Identity(e.rows, e.rows), d);
      return Predicate::norm_ball(std::move(sel), std::move(S), std::move(c), d);
    }
    const std::size_t at = head.pos;
    Affine e = expr();
    if (e.rows != 1) throw ParseError(ParseError::Kind::semantic, at, "comparison of a vector expression; use norm2");
    require_symbols(e, at);
    const Tok rel = peek().kind;
    if (rel != Tok::le && rel != Tok::ge) expect(Tok::le, "'<=' or '>='");
    next();
    const double bound = signed_number();
    auto [sel, S, c] = projection(e);
    // S y - c  with c = -constant
    Eigen::RowVectorXd w = S.row(0);
    const double k = -c[0];
    if (rel == Tok::le) return Predicate::linear(std::move(sel), -w, bound - k);
    return Predicate::linear(std::move(sel), w, k - bound);
  }

  static void require_symbols(const Affine& e, std::size_t at) {
    if (e.is_constant()) throw ParseError(ParseError::Kind::semantic, at, "predicate does not reference any state");
  }

  static std::tuple<std::vector<StateRef>, Eigen::MatrixXd, Eigen::VectorXd> projection(const Affine& e) {
    std::vector<StateRef> sel;
    Eigen::MatrixXd S(e.rows, static_cast<Eigen::Index>(e.coef.size()));
    Eigen::Index j = 0;
    for (const auto& [ref, col] : e.coef) {
      sel.push_back(ref);
      S.col(j++) = col;
    }
    return {std::move(sel), std::move(S), -e.constant};
  }

  Affine expr() {
    Affine acc = term();
    while (peek().kind == Tok::plus || peek().kind == Tok::minus) {
      const Token& op = next();
      Affine rhs = term();
      acc = combine(std::move(acc), std::move(rhs), op.kind == Tok::minus ? -1.0 : 1.0, op.pos);
    }
    return acc;
  }

  Affine term() {
    Affine acc = unary();
    while (peek().kind == Tok::star) {
      const std::size_t at = next().pos;
      Affine rhs = unary();
      if (acc.is_constant() && acc.rows == 1) {
        acc = scale(std::move(rhs), acc.constant[0]);
      } else if (rhs.is_constant() && rhs.rows == 1) {
        acc = scale(std::move(acc), rhs.constant[0]);
      } else {
        throw ParseError(ParseError::Kind::semantic, at, "expression is not affine");
      }
    }
    return acc;
  }

  Affine unary() {
    if (peek().kind == Tok::minus) {
      next();
      return scale(unary(), -1.0);
    }
    if (peek().kind == Tok::plus) {
      next();
      return unary();
    }
    return primary();
  }

  Affine primary() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::number: {
        next();
        Affine a;
        a.constant[0] = t.number;
        return a;
      }
      case Tok::lparen: {
        next();
        Affine a = expr();
        expect(Tok::rparen, "')'");
        return a;
      }
      case Tok::lbracket: {
        next();
        std::vector<Affine> parts;
        parts.push_back(expr());
        while (peek().kind == Tok::comma) {
          next();
          parts.push_back(expr());
        }
        expect(Tok::rbracket, "']'");
        return stack(parts, t.pos);
      }
      case Tok::ident: {
        next();
        return symbol(t);
      }
      default:
        throw ParseError(ParseError::Kind::syntax, t.pos,
                         t.kind == Tok::end ? "unexpected end of input" : "unexpected '" + t.text + "'");
    }
  }

  Affine symbol(const Token& t) {
    const std::string& s = t.text;
    auto bad = [&] { return ParseError(ParseError::Kind::syntax, t.pos, "unknown symbol '" + s + "'"); };
    if (s.size() < 2 || s[0] != 'x' || !std::isdigit(static_cast<unsigned char>(s[1]))) throw bad();
    const auto us = s.find('_');
    auto to_int = [&](std::string_view v) {
      int out = 0;
      auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
      if (ec != std::errc() || ptr != v.data() + v.size()) throw bad();
      return out;
    };
    const int agent = to_int(std::string_view(s).substr(1, us == std::string::npos ? std::string::npos : us - 1));
    if (agent < 1) throw ParseError(ParseError::Kind::semantic, t.pos, "agent ids start at 1");
    const auto dim_it = dims_.find(agent);
    const int dim = dim_it == dims_.end() ? 1 : dim_it->second;
    Affine a;
    if (us != std::string::npos) {
      const int index = to_int(std::string_view(s).substr(us + 1));
      if (index < 1 || index > dim)
        throw ParseError(ParseError::Kind::semantic, t.pos,
                         "state index " + std::to_string(index) + " out of range for agent " + std::to_string(agent) +
                             " (dimension " + std::to_string(dim) + ")");
      a.coef[{agent, index - 1}] = Eigen::VectorXd::Ones(1);
      return a;
    }
    a.rows = dim;
    a.constant = Eigen::VectorXd::Zero(dim);
    for (int k = 0; k < dim; ++k) {
      Eigen::VectorXd unit = Eigen::VectorXd::Zero(dim);
      unit[k] = 1.0;
      a.coef[{agent, k}] = unit;
    }
    return a;
  }

  static Affine scale(Affine a, double k) {
    for (auto& [ref, col] : a.coef) col *= k;
    a.constant *= k;
    return a;
  }

  static Affine broadcast(Affine a, Eigen::Index rows) {
    if (a.rows == rows) return a;
    a.rows = rows;
    a.constant = Eigen::VectorXd::Constant(rows, a.constant[0]);
    return a;
  }

  static Affine combine(Affine lhs, Affine rhs, double sign, std::size_t at) {
    if (lhs.rows != rhs.rows) {
      if (lhs.is_constant() && lhs.rows == 1) {
        lhs = broadcast(std::move(lhs), rhs.rows);
      } else if (rhs.is_constant() && rhs.rows == 1) {
        rhs = broadcast(std::move(rhs), lhs.rows);
      } else {
        throw ParseError(ParseError::Kind::semantic, at,
                         "dimension mismatch: " + std::to_string(lhs.rows) + " vs " + std::to_string(rhs.rows));
      }
    }
    for (auto& [ref, col] : rhs.coef) {
      auto [it, inserted] = lhs.coef.try_emplace(ref, Eigen::VectorXd::Zero(lhs.rows));
      it->second += sign * col;
    }
    lhs.constant += sign * rhs.constant;
    return lhs;
  }

  static Affine stack(const std::vector<Affine>& parts, std::size_t at) {
    Affine out;
    out.rows = 0;
    for (const auto& p : parts) out.rows += p.rows;
    out.constant = Eigen::VectorXd::Zero(out.rows);
    Eigen::Index row = 0;
    for (const auto& p : parts) {
      for (const auto& [ref, col] : p.coef) {
        auto [it, inserted] = out.coef.try_emplace(ref, Eigen::VectorXd::Zero(out.rows));
        it->second.segment(row, p.rows) += col;
      }
      out.constant.segment(row, p.rows) = p.constant;
      row += p.rows;
    }
    if (out.rows == 0) throw ParseError(ParseError::Kind::syntax, at, "empty vector");
    return out;
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  const AgentDimensions& dims_;
};

}  // namespace detail

/// Parses one task. Agent dimensions resolve bare symbols x<agent>; missing
/// entries are treated as scalar agents.
inline TemporalFormula parse_formula(std::string_view text, const AgentDimensions& dims = {}) {
  detail::Parser parser(text, dims);
  TemporalFormula phi = parser.formula();
  phi.text = std::string(text);
  return phi;
}

}  // namespace stlagc
