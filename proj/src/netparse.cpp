#include "lrsens/netparse.hpp"

#include <charconv>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <system_error>
#include <vector>

namespace lrsens {

ParseError::ParseError(const std::string& message, std::size_t line,
                       std::size_t column)
    : Error(std::to_string(line) + ":" + std::to_string(column) + ": " +
            message),
      message_(message),
      line_(line),
      column_(column) {}

namespace {

enum class Tok {
  kIdent,
  kNumber,
  kEquals,
  kColon,
  kArrow,
  kAt,
  kLParen,
  kRParen,
  kComma,
  kPlus,
  kMinus,
  kStar,
  kNewline,
  kEnd,
};

struct Token {
  Tok kind;
  std::string_view text;
  std::size_t line, column;
};

const char* describe(Tok t) {
  switch (t) {
    case Tok::kIdent: return "identifier";
    case Tok::kNumber: return "number";
    case Tok::kEquals: return "'='";
    case Tok::kColon: return "':'";
    case Tok::kArrow: return "'->'";
    case Tok::kAt: return "'@'";
    case Tok::kLParen: return "'('";
    case Tok::kRParen: return "')'";
    case Tok::kComma: return "','";
    case Tok::kPlus: return "'+'";
    case Tok::kMinus: return "'-'";
    case Tok::kStar: return "'*'";
    case Tok::kNewline: return "end of line";
    case Tok::kEnd: return "end of input";
  }
  return "token";
}

constexpr std::int64_t kMaxCoefficient = 1000;

bool is_ident_start(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
}
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_ident_char(char c) { return is_ident_start(c) || is_digit(c); }

class Lexer {
 public:
  explicit Lexer(std::string_view text) : s_(text) {}

  Token next() {
    for (;;) {
      if (i_ >= s_.size()) return make(Tok::kEnd, i_, i_);
      const char c = s_[i_];
      if (c == ' ' || c == '\t' || c == '\r') {
        advance();
        continue;
      }
      if (c == '#') {
        while (i_ < s_.size() && s_[i_] != '\n') advance();
        continue;
      }
      break;
    }
    const std::size_t start = i_;
    const std::size_t line = line_, col = col_;
    const char c = s_[i_];
    auto single = [&](Tok t) {
      advance();
      return Token{t, s_.substr(start, 1), line, col};
    };
    switch (c) {
      case '\n': {
        Token t{Tok::kNewline, s_.substr(start, 1), line, col};
        ++i_;
        ++line_;
        col_ = 1;
        return t;
      }
      case '=': return single(Tok::kEquals);
      case ':': return single(Tok::kColon);
      case '@': return single(Tok::kAt);
      case '(': return single(Tok::kLParen);
      case ')': return single(Tok::kRParen);
      case ',': return single(Tok::kComma);
      case '+': return single(Tok::kPlus);
      case '*': return single(Tok::kStar);
      case '-':
        if (i_ + 1 < s_.size() && s_[i_ + 1] == '>') {
          advance();
          advance();
          return Token{Tok::kArrow, s_.substr(start, 2), line, col};
        }
        return single(Tok::kMinus);
      default: break;
    }
    if (is_ident_start(c)) {
      while (i_ < s_.size() && is_ident_char(s_[i_])) advance();
      return Token{Tok::kIdent, s_.substr(start, i_ - start), line, col};
    }
    if (is_digit(c) ||
        (c == '.' && i_ + 1 < s_.size() && is_digit(s_[i_ + 1]))) {
      while (i_ < s_.size() && is_digit(s_[i_])) advance();
      if (i_ < s_.size() && s_[i_] == '.') {
        advance();
        while (i_ < s_.size() && is_digit(s_[i_])) advance();
      }
      if (i_ < s_.size() && (s_[i_] == 'e' || s_[i_] == 'E')) {
        std::size_t j = i_ + 1;
        if (j < s_.size() && (s_[j] == '+' || s_[j] == '-')) ++j;
        if (j < s_.size() && is_digit(s_[j])) {
          while (i_ < j) advance();
          while (i_ < s_.size() && is_digit(s_[i_])) advance();
        }
      }
      return Token{Tok::kNumber, s_.substr(start, i_ - start), line, col};
    }
    throw ParseError(std::string("unexpected character ") + quote(c), line,
                     col);
  }

 private:
  static std::string quote(char c) {
    const auto u = static_cast<unsigned char>(c);
    if (u >= 0x20 && u < 0x7f) return std::string("'") + c + "'";
    std::ostringstream os;
    os << "0x" << std::hex << static_cast<unsigned>(u);
    return os.str();
  }
  Token make(Tok t, std::size_t a, std::size_t b) {
    return Token{t, s_.substr(a, b - a), line_, col_};
  }
  void advance() {
    ++i_;
    ++col_;
  }

  std::string_view s_;
  std::size_t i_ = 0, line_ = 1, col_ = 1;
};

class Parser {
 public:
  explicit Parser(std::string_view text) : lex_(text) { tok_ = lex_.next(); }

  ModelDocument parse() {
    for (;;) {
      if (tok_.kind == Tok::kEnd) break;
      if (tok_.kind == Tok::kNewline) {
        shift();
        continue;
      }
      statement();
    }
    return build();
  }

 private:
  struct PendingReaction {
    Reaction reaction;
    Token at;
  };
  struct PendingObservable {
    std::string name;
    std::vector<std::pair<std::size_t, double>> terms;
  };

  [[noreturn]] void fail(const std::string& msg, const Token& t) const {
    throw ParseError(msg, t.line, t.column);
  }
  [[noreturn]] void fail(const std::string& msg) const { fail(msg, tok_); }

  void shift() { tok_ = lex_.next(); }

  Token expect(Tok kind) {
    if (tok_.kind != kind)
      fail(std::string("expected ") + describe(kind) + ", found " +
           describe(tok_.kind));
    Token t = tok_;
    shift();
    return t;
  }

  void end_of_statement() {
    if (tok_.kind == Tok::kEnd) return;
    expect(Tok::kNewline);
  }

  void statement() {
    const Token kw = expect(Tok::kIdent);
    if (kw.text == "species")
      species_decl();
    else if (kw.text == "parameter")
      parameter_decl();
    else if (kw.text == "reaction")
      reaction_decl();
    else if (kw.text == "observable")
      observable_decl();
    else
      fail("unknown declaration '" + std::string(kw.text) + "'", kw);
    end_of_statement();
  }

  void declare_name(const Token& name) {
    const std::string key(name.text);
    if (species_index_.count(key) || parameter_index_.count(key))
      fail("duplicate declaration of '" + key + "'", name);
  }

  std::int64_t integer(const Token& t, const char* what) {
    std::int64_t v = 0;
    const auto* first = t.text.data();
    const auto* last = first + t.text.size();
    auto [p, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || p != last)
      fail(std::string(what) + " must be an integer", t);
    return v;
  }

  double real(const Token& t) {
    double v = 0.0;
    const auto* first = t.text.data();
    const auto* last = first + t.text.size();
    auto [p, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || p != last || !std::isfinite(v))
      fail("malformed number '" + std::string(t.text) + "'", t);
    return v;
  }

  void species_decl() {
    const Token name = expect(Tok::kIdent);
    declare_name(name);
    expect(Tok::kEquals);
    const Token value = expect(Tok::kNumber);
    const std::int64_t count = integer(value, "initial count");
    species_index_[std::string(name.text)] = species_.size();
    species_.emplace_back(name.text);
    initial_.push_back(count);
  }

  void parameter_decl() {
    const Token name = expect(Tok::kIdent);
    declare_name(name);
    expect(Tok::kEquals);
    const Token value = expect(Tok::kNumber);
    const double v = real(value);
    if (!(v > 0.0)) fail("rate constant must be positive", value);
    parameter_index_[std::string(name.text)] = parameter_names_.size();
    parameter_names_.emplace_back(name.text);
    parameter_values_.push_back(v);
  }

  std::size_t species_ref() {
    const Token t = expect(Tok::kIdent);
    auto it = species_index_.find(std::string(t.text));
    if (it == species_index_.end())
      fail("undeclared species '" + std::string(t.text) + "'", t);
    return it->second;
  }

  std::size_t parameter_ref() {
    const Token t = expect(Tok::kIdent);
    auto it = parameter_index_.find(std::string(t.text));
    if (it == parameter_index_.end())
      fail("undeclared parameter '" + std::string(t.text) + "'", t);
    return it->second;
  }

  std::vector<SpeciesCount> side() {
    std::vector<SpeciesCount> out;
    if (tok_.kind == Tok::kNumber && tok_.text == "0") {
      shift();
      return out;
    }
    for (;;) {
      std::int64_t count = 1;
      if (tok_.kind == Tok::kNumber) {
        const Token c = tok_;
        shift();
        count = integer(c, "stoichiometric coefficient");
        if (count < 1) fail("stoichiometric coefficient must be positive", c);
        if (count > kMaxCoefficient)
          fail("stoichiometric coefficient exceeds " +
                   std::to_string(kMaxCoefficient),
               c);
      }
      const Token at = tok_;
      const std::size_t s = species_ref();
      bool merged = false;
      for (auto& sc : out)
        if (sc.species == s) {
          sc.count += count;
          merged = true;
          if (sc.count > kMaxCoefficient)
            fail("stoichiometric coefficient exceeds " +
                     std::to_string(kMaxCoefficient),
                 at);
        }
      if (!merged) out.push_back({s, count});
      if (tok_.kind != Tok::kPlus) break;
      shift();
    }
    return out;
  }

  RateTerm rate_term(const std::vector<SpeciesCount>& reactants) {
    const Token kind = expect(Tok::kIdent);
    expect(Tok::kLParen);
    if (kind.text == "massaction") {
      MassActionTerm t{parameter_ref()};
      expect(Tok::kRParen);
      return t;
    }
    if (kind.text == "mm") {
      MichaelisMentenTerm t;
      t.max_rate = parameter_ref();
      expect(Tok::kComma);
      t.half_saturation = parameter_ref();
      if (tok_.kind == Tok::kComma) {
        shift();
        t.substrate = species_ref();
        expect(Tok::kRParen);
      } else {
        const Token close = expect(Tok::kRParen);
        if (reactants.size() != 1)
          fail("mm() without a substrate needs exactly one reactant species",
               close);
        t.substrate = reactants.front().species;
      }
      if (tok_.kind == Tok::kStar) {
        shift();
        t.modifier = species_ref();
      }
      return t;
    }
    fail("unknown rate law '" + std::string(kind.text) + "'", kind);
  }

  void reaction_decl() {
    const Token name = expect(Tok::kIdent);
    for (const auto& r : reactions_)
      if (r.reaction.name == name.text)
        fail("duplicate reaction '" + std::string(name.text) + "'", name);
    expect(Tok::kColon);
    PendingReaction pr{{}, name};
    pr.reaction.name = std::string(name.text);
    pr.reaction.reactants = side();
    expect(Tok::kArrow);
    pr.reaction.products = side();
    expect(Tok::kAt);
    for (;;) {
      pr.reaction.rate.push_back(rate_term(pr.reaction.reactants));
      if (tok_.kind != Tok::kPlus) break;
      shift();
    }
    reactions_.push_back(std::move(pr));
  }

  void observable_decl() {
    const Token name = expect(Tok::kIdent);
    for (const auto& o : observables_)
      if (o.name == name.text)
        fail("duplicate observable '" + std::string(name.text) + "'", name);
    expect(Tok::kEquals);
    PendingObservable obs{std::string(name.text), {}};
    if (tok_.kind == Tok::kNumber && tok_.text == "0") {
      shift();
      observables_.push_back(std::move(obs));
      return;
    }
    double sign = 1.0;
    if (tok_.kind == Tok::kMinus) {
      sign = -1.0;
      shift();
    }
    for (;;) {
      double w = 1.0;
      if (tok_.kind == Tok::kNumber) {
        w = real(tok_);
        shift();
        if (tok_.kind == Tok::kStar) shift();
      }
      obs.terms.emplace_back(species_ref(), sign * w);
      if (tok_.kind == Tok::kPlus)
        sign = 1.0;
      else if (tok_.kind == Tok::kMinus)
        sign = -1.0;
      else
        break;
      shift();
    }
    observables_.push_back(std::move(obs));
  }

  ModelDocument build() {
    const Token eof = tok_;
    if (species_.empty()) fail("no species declared", eof);
    ParameterVector params(parameter_names_, parameter_values_);
    std::vector<Reaction> reactions;
    for (const auto& r : reactions_) reactions.push_back(r.reaction);
    ModelDocument doc;
    try {
      doc.network = ReactionNetwork(species_, std::move(reactions), params);
    } catch (const Error& e) {
      fail(e.what(), reactions_.empty() ? eof : reactions_.front().at);
    }
    doc.initial_state = initial_;
    if (observables_.empty()) {
      doc.observables = ObservableSet::identity(species_);
    } else {
      const auto m = static_cast<Eigen::Index>(observables_.size());
      const auto n = static_cast<Eigen::Index>(species_.size());
      doc.observables.weights = RowMatrix::Zero(m, n);
      for (Eigen::Index i = 0; i < m; ++i) {
        doc.observables.names.push_back(observables_[i].name);
        for (const auto& [s, w] : observables_[i].terms)
          doc.observables.weights(i, static_cast<Eigen::Index>(s)) += w;
      }
    }
    return doc;
  }

  Lexer lex_;
  Token tok_{};
  std::vector<std::string> species_;
  State initial_;
  std::map<std::string, std::size_t> species_index_;
  std::vector<std::string> parameter_names_;
  std::vector<double> parameter_values_;
  std::map<std::string, std::size_t> parameter_index_;
  std::vector<PendingReaction> reactions_;
  std::vector<PendingObservable> observables_;
};

std::string number(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

void write_side(std::ostringstream& os, const ReactionNetwork& net,
                const std::vector<SpeciesCount>& side) {
  if (side.empty()) {
    os << "0";
    return;
  }
  for (std::size_t i = 0; i < side.size(); ++i) {
    if (i) os << " + ";
    if (side[i].count != 1) os << side[i].count << " ";
    os << net.species()[side[i].species];
  }
}

}  // namespace

ModelDocument parse_model(std::string_view text) {
  return Parser(text).parse();
}

std::string serialize_model(const ModelDocument& doc) {
  const auto& net = doc.network;
  const auto& params = net.parameters();
  std::ostringstream os;
  for (std::size_t s = 0; s < net.num_species(); ++s)
    os << "species " << net.species()[s] << " = " << doc.initial_state.at(s)
       << "\n";
  for (std::size_t p = 0; p < params.size(); ++p)
    os << "parameter " << params.name(p) << " = " << number(params.value(p))
       << "\n";
  for (const auto& r : net.reactions()) {
    os << "reaction " << r.name << ": ";
    write_side(os, net, r.reactants);
    os << " -> ";
    write_side(os, net, r.products);
    os << " @ ";
    for (std::size_t k = 0; k < r.rate.size(); ++k) {
      if (k) os << " + ";
      if (const auto* ma = std::get_if<MassActionTerm>(&r.rate[k])) {
        os << "massaction(" << params.name(ma->rate) << ")";
        continue;
      }
      const auto& mm = std::get<MichaelisMentenTerm>(r.rate[k]);
      os << "mm(" << params.name(mm.max_rate) << ", "
         << params.name(mm.half_saturation);
      const bool implicit = r.reactants.size() == 1 &&
                            r.reactants.front().species == mm.substrate;
      if (!implicit) os << ", " << net.species()[mm.substrate];
      os << ")";
      if (mm.modifier) os << " * " << net.species()[*mm.modifier];
    }
    os << "\n";
  }
  if (!(doc.observables == ObservableSet::identity(net.species()))) {
    const auto& w = doc.observables.weights;
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      os << "observable " << doc.observables.names[i] << " = ";
      bool first = true;
      for (Eigen::Index s = 0; s < w.cols(); ++s) {
        double c = w(i, s);
        if (c == 0.0) continue;
        if (first) {
          if (c < 0.0) os << "-";
        } else {
          os << (c < 0.0 ? " - " : " + ");
        }
        c = std::abs(c);
        if (c != 1.0) os << number(c) << " ";
        os << net.species()[static_cast<std::size_t>(s)];
        first = false;
      }
      if (first) os << "0";
      os << "\n";
    }
  }
  return os.str();
}

std::string serialize_model(const ReactionNetwork& network,
                            const State& initial_state) {
  return serialize_model(ModelDocument{
      network, initial_state, ObservableSet::identity(network.species())});
}

}  // namespace lrsens
