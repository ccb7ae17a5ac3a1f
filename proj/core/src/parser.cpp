#include "confop/parser.hpp"

#include <cctype>
#include <map>
#include <optional>
#include <sstream>
#include <vector>

namespace confop {

namespace {

struct Token {
  enum Kind { Ident, Number, Punct, End } kind = End;
  std::string text;
  int line = 1, col = 1;
};

class Lexer {
 public:
  explicit Lexer(const std::string& src) : src_(src) { advance(); }

  const Token& peek() const { return tok_; }
  Token take() {
    Token t = tok_;
    advance();
    return t;
  }
  bool at_end() const { return tok_.kind == Token::End; }

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, tok_.line, tok_.col); }

 private:
  void advance() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
      } else if (c == '\n') {
        ++pos_;
        ++line_;
        col_ = 1;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
        ++col_;
      } else {
        break;
      }
    }
    tok_.line = line_;
    tok_.col = col_;
    if (pos_ >= src_.size()) {
      tok_ = {Token::End, "", line_, col_};
      return;
    }
    char c = src_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
        ++pos_;
      tok_ = {Token::Ident, src_.substr(start, pos_ - start), line_, col_};
      col_ += int(pos_ - start);
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      tok_ = {Token::Number, src_.substr(start, pos_ - start), line_, col_};
      col_ += int(pos_ - start);
    } else {
      tok_ = {Token::Punct, std::string(1, c), line_, col_};
      ++pos_;
      ++col_;
    }
  }

  const std::string& src_;
  std::size_t pos_ = 0;
  int line_ = 1, col_ = 1;
  Token tok_;
};

struct HeadInfo {
  FactorKind kind;
  int own = 0;
  AuxName aux = AuxName::Phi;
  bool head_indices_are_derivs = false;
};

std::optional<HeadInfo> head_info(const std::string& name) {
  if (name == "R") return HeadInfo{FactorKind::Riemann, 4};
  if (name == "W") return HeadInfo{FactorKind::Weyl, 4};
  if (name == "Ric") return HeadInfo{FactorKind::Ricci, 2};
  if (name == "S") return HeadInfo{FactorKind::Scalar, 0};
  if (name == "SP") return HeadInfo{FactorKind::SymSchouten, 2};
  if (name == "f") return HeadInfo{FactorKind::Density, 0};
  if (name == "phi") return HeadInfo{FactorKind::AuxScalar, 0, AuxName::Phi};
  if (name == "ups") return HeadInfo{FactorKind::AuxScalar, 0, AuxName::Ups};
  if (name == "Y") return HeadInfo{FactorKind::AuxScalar, 0, AuxName::Y};
  if (name == "g" || name == "ginv") return HeadInfo{FactorKind::Metric, 2};
  if (name == "Rlin") return HeadInfo{FactorKind::LinRiemann, 4};
  if (name == "T") return HeadInfo{FactorKind::SymTensor, 0, AuxName::Phi, true};
  if (name == "v") return HeadInfo{FactorKind::AuxVector, 1};
  if (name == "Rt") return HeadInfo{FactorKind::AmbientCurv, 4};
  if (name == "ut") return HeadInfo{FactorKind::AmbientDensity, 0};
  return std::nullopt;
}

class Parser {
 public:
  explicit Parser(const std::string& src) : lex_(src) {}

  LinearCombination parse_lc() {
    LinearCombination out;
    bool negate = false;
    // leading sign of the first term
    consume_signs(negate);
    while (!lex_.at_end()) {
      Term t = parse_term();
      if (negate) t.coeff = -t.coeff;
      out.add(std::move(t));
      if (lex_.at_end()) break;
      negate = false;
      if (!consume_signs(negate)) {
        // newline-separated terms carry an implicit '+'; anything else left
        // over at this point is a syntax error inside a term
        if (!lex_.at_end()) {
          // the lexer skips newlines silently, so a fresh term must start here
          continue_ok();
        }
      }
    }
    return out;
  }

  Coefficient parse_coefficient_only() {
    Coefficient c = parse_coeff_expr();
    if (!lex_.at_end()) lex_.fail("trailing input after coefficient");
    return c;
  }

 private:
  Lexer lex_;

  void continue_ok() {
    const Token& t = lex_.peek();
    if (t.kind == Token::Ident || t.kind == Token::Number || (t.kind == Token::Punct && t.text == "("))
      return;
    lex_.fail("expected a term");
  }

  bool consume_signs(bool& negate) {
    bool saw = false;
    while (lex_.peek().kind == Token::Punct && (lex_.peek().text == "+" || lex_.peek().text == "-")) {
      if (lex_.take().text == "-") negate = !negate;
      saw = true;
    }
    return saw;
  }

  bool at_factor_start() const {
    const Token& t = lex_.peek();
    if (t.kind != Token::Ident) return false;
    return t.text == "D" || head_info(t.text).has_value();
  }

  Term parse_term() {
    Term t;
    // per-index occurrence list
    std::map<std::string, std::vector<std::pair<int, int>>> uses;
    bool any = false;
    while (true) {
      if (at_factor_start()) {
        parse_factor(t, uses);
        any = true;
      } else {
        t.coeff = t.coeff * parse_coeff_factor();
        any = true;
      }
      if (lex_.peek().kind == Token::Punct && lex_.peek().text == "*") {
        lex_.take();
        continue;
      }
      if (lex_.peek().kind == Token::Punct && lex_.peek().text == "/") {
        lex_.take();
        t.coeff = t.coeff / parse_coeff_factor();
        continue;
      }
      break;
    }
    if (!any) lex_.fail("empty term");
    resolve_indices(t, uses);
    t.validate();
    return t;
  }

  // one multiplicative element of the coefficient (number, symbol, or group)
  Coefficient parse_coeff_factor() {
    const Token& tok = lex_.peek();
    Coefficient base;
    if (tok.kind == Token::Number) {
      base = Coefficient(std::int64_t(std::stoll(lex_.take().text)));
    } else if (tok.kind == Token::Ident && tok.text == "n") {
      lex_.take();
      base = Coefficient::sym_n();
    } else if (tok.kind == Token::Ident && tok.text == "w") {
      lex_.take();
      base = Coefficient::sym_w();
    } else if (tok.kind == Token::Punct && tok.text == "(") {
      lex_.take();
      base = parse_coeff_expr();
      expect(")");
    } else if (tok.kind == Token::Punct && tok.text == "-") {
      lex_.take();
      return -parse_coeff_factor();
    } else {
      lex_.fail("expected coefficient");
    }
    while (lex_.peek().kind == Token::Punct && lex_.peek().text == "^") {
      lex_.take();
      bool neg = false;
      while (lex_.peek().kind == Token::Punct && lex_.peek().text == "-") {
        lex_.take();
        neg = !neg;
      }
      if (lex_.peek().kind != Token::Number) lex_.fail("expected integer exponent");
      int e = std::stoi(lex_.take().text);
      Coefficient p(1);
      for (int i = 0; i < e; ++i) p = p * base;
      base = neg ? Coefficient(1) / p : p;
    }
    return base;
  }

  Coefficient parse_coeff_expr() {
    Coefficient acc = parse_coeff_product();
    while (lex_.peek().kind == Token::Punct &&
           (lex_.peek().text == "+" || lex_.peek().text == "-")) {
      std::string op = lex_.take().text;
      Coefficient rhs = parse_coeff_product();
      acc = (op == "+") ? acc + rhs : acc - rhs;
    }
    return acc;
  }

  Coefficient parse_coeff_product() {
    Coefficient acc = parse_coeff_factor();
    while (lex_.peek().kind == Token::Punct &&
           (lex_.peek().text == "*" || lex_.peek().text == "/")) {
      std::string op = lex_.take().text;
      Coefficient rhs = parse_coeff_factor();
      acc = (op == "*") ? acc * rhs : acc / rhs;
    }
    return acc;
  }

  void expect(const std::string& p) {
    if (lex_.peek().kind != Token::Punct || lex_.peek().text != p)
      lex_.fail("expected '" + p + "'");
    lex_.take();
  }

  std::vector<std::string> parse_index_group() {
    expect("{");
    std::vector<std::string> idx;
    if (lex_.peek().kind == Token::Punct && lex_.peek().text == "}") {
      lex_.take();
      return idx;
    }
    while (true) {
      if (lex_.peek().kind != Token::Ident && lex_.peek().kind != Token::Number)
        lex_.fail("expected index name");
      idx.push_back(lex_.take().text);
      if (lex_.peek().kind == Token::Punct && lex_.peek().text == ",") {
        lex_.take();
        continue;
      }
      break;
    }
    expect("}");
    return idx;
  }

  void parse_factor(Term& t, std::map<std::string, std::vector<std::pair<int, int>>>& uses) {
    std::vector<std::string> derivs;
    Token head = lex_.peek();
    if (head.kind == Token::Ident && head.text == "D") {
      lex_.take();
      derivs = parse_index_group();
      head = lex_.peek();
    }
    if (head.kind != Token::Ident) lex_.fail("expected factor head");
    auto info = head_info(head.text);
    if (!info) lex_.fail("unknown factor head '" + head.text + "'");
    lex_.take();
    std::vector<std::string> own;
    if (lex_.peek().kind == Token::Punct && lex_.peek().text == "{") own = parse_index_group();

    if (info->head_indices_are_derivs) {
      // SymTensor lists its symmetric slots in the head braces
      derivs.insert(derivs.end(), own.begin(), own.end());
      own.clear();
    }
    if (int(own.size()) != info->own) {
      throw ParseError("factor '" + head.text + "' needs " + std::to_string(info->own) + " indices, got " +
                           std::to_string(own.size()),
                       head.line, head.col);
    }
    Factor fac{info->kind, int(derivs.size()), info->aux};
    int f = t.add_factor(fac);
    std::vector<std::string> all = derivs;
    all.insert(all.end(), own.begin(), own.end());
    for (std::size_t s = 0; s < all.size(); ++s) uses[all[s]].push_back({f, int(s)});
  }

  void resolve_indices(Term& t, std::map<std::string, std::vector<std::pair<int, int>>>& uses) {
    for (auto& [name, occ] : uses) {
      if (name == "T0" || name == "INF") {
        for (auto& [f, s] : occ)
          t.conn[std::size_t(f)][std::size_t(s)] = Port{-1, -1, -1, std::int16_t(name == "T0" ? 0 : 1)};
        continue;
      }
      if (occ.size() == 1) {
        t.set_free(occ[0].first, occ[0].second, name);
      } else if (occ.size() == 2) {
        t.link(occ[0].first, occ[0].second, occ[1].first, occ[1].second);
      } else {
        throw ParseError("index '" + name + "' appears " + std::to_string(occ.size()) + " times (at most twice)",
                         1, 1);
      }
    }
  }
};

std::string fresh_name(int k, const Term& t) {
  // a, b, ..., z, aa, ab, ...  skipping names already used as free labels
  auto gen = [](int i) {
    std::string s;
    ++i;
    while (i > 0) {
      --i;
      s.insert(s.begin(), char('a' + i % 26));
      i /= 26;
    }
    return s;
  };
  int i = 0, seen = 0;
  while (true) {
    std::string cand = gen(i++);
    if (cand == "n" || cand == "w" || cand == "v") continue;
    bool clash = false;
    for (auto& l : t.labels)
      if (l == cand) clash = true;
    if (clash) continue;
    if (seen++ == k) return cand;
  }
}

}  // namespace

LinearCombination parse(const std::string& text) {
  Parser p(text);
  return p.parse_lc();
}

Coefficient parse_coefficient(const std::string& text) {
  Parser p(text);
  return p.parse_coefficient_only();
}

std::string print(const Term& t) {
  std::map<std::pair<int, int>, std::string> names;
  int next = 0;
  for (std::size_t f = 0; f < t.conn.size(); ++f)
    for (std::size_t s = 0; s < t.conn[f].size(); ++s) {
      const Port& p = t.conn[f][s];
      if (p.is_paired() && names.find({int(f), int(s)}) == names.end()) {
        std::string nm = fresh_name(next++, t);
        names[{int(f), int(s)}] = nm;
        names[{int(p.factor), int(p.slot)}] = nm;
      }
    }
  std::ostringstream os;
  if (!t.coeff.is_one()) os << t.coeff.str() << " * ";
  for (std::size_t f = 0; f < t.factors.size(); ++f) {
    if (f) os << " * ";
    const Factor& fac = t.factors[f];
    auto slot_name = [&](int s) -> std::string {
      const Port& p = t.conn[f][std::size_t(s)];
      if (p.is_fixed()) return p.fixed == 0 ? "T0" : "INF";
      if (p.is_free()) return t.labels[std::size_t(p.label)];
      return names[{int(f), s}];
    };
    bool head_derivs = (fac.kind == FactorKind::SymTensor);
    if (fac.deriv > 0 && !head_derivs) {
      os << "D{";
      for (int s = 0; s < fac.deriv; ++s) os << (s ? "," : "") << slot_name(s);
      os << "}";
    }
    os << factor_str(fac);
    int own = fac.own_slots();
    if (own > 0 || head_derivs) {
      os << "{";
      int begin = head_derivs ? 0 : fac.deriv;
      for (int s = begin; s < fac.slots(); ++s) os << (s > begin ? "," : "") << slot_name(s);
      os << "}";
    }
  }
  return os.str();
}

std::string print(const LinearCombination& L) {
  if (L.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (auto& t : L.terms()) {
    if (!first) os << "\n+ ";
    first = false;
    os << print(t);
  }
  return os.str();
}

}  // namespace confop
