#include "mathcur/mathverify.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <tuple>

#include "mathcur/text.hpp"

namespace mathcur {

namespace {

// cpp_int's string constructor reads a leading 0 as an octal prefix.
BigInt decimal_digits(const std::string& digits) {
  const auto nz = digits.find_first_not_of('0');
  return nz == std::string::npos ? BigInt(0) : BigInt(digits.substr(nz));
}


using boost::multiprecision::denominator;
using boost::multiprecision::numerator;

struct Unsupported {};

[[noreturn]] void unsupported() { throw Unsupported{}; }

// ---------------------------------------------------------------------------
// Exact arithmetic over single-variable rational polynomials and
// rational multiples of square roots. Anything else is Unsupported.

struct Num {
  enum class Kind { poly, radical };
  Kind kind = Kind::poly;
  std::string var;                   // empty for constants
  std::vector<BigRational> coeffs;   // ascending powers, trimmed; empty is 0
  BigRational rad_coef;
  BigInt radicand;
  std::optional<Decimal> decimal;    // only for a bare decimal literal
};

void trim(Num& n) {
  while (!n.coeffs.empty() && n.coeffs.back() == 0) n.coeffs.pop_back();
  if (n.coeffs.size() <= 1) n.var.clear();
}

Num make_const(BigRational c) {
  Num n;
  if (c != 0) n.coeffs.push_back(std::move(c));
  return n;
}

bool is_const(const Num& n) { return n.kind == Num::Kind::poly && n.coeffs.size() <= 1; }

BigRational const_value(const Num& n) { return n.coeffs.empty() ? BigRational(0) : n.coeffs[0]; }

Num make_radical(BigRational coef, BigInt radicand) {
  if (coef == 0) return make_const(0);
  if (radicand == 1) return make_const(std::move(coef));
  Num n;
  n.kind = Num::Kind::radical;
  n.rad_coef = std::move(coef);
  n.radicand = std::move(radicand);
  return n;
}

// Splits n >= 1 into square * squarefree. Fails when the cofactor left after
// trial division could still hide a large square factor.
std::pair<BigInt, BigInt> square_free_split(BigInt n) {
  constexpr unsigned kLimit = 100000;
  BigInt square = 1;
  BigInt free_part = 1;
  for (unsigned p = 2; p <= kLimit && BigInt(p) * p <= n; p += (p == 2 ? 1 : 2)) {
    unsigned count = 0;
    while (n % p == 0) {
      n /= p;
      ++count;
    }
    for (unsigned k = 0; k < count / 2; ++k) square *= p;
    if (count % 2) free_part *= p;
  }
  if (n > 1) {
    const BigInt limit_cubed = BigInt(kLimit) * kLimit * kLimit;
    const BigInt r = boost::multiprecision::sqrt(n);
    if (r * r == n) {
      square *= r;
    } else if (n < limit_cubed) {
      free_part *= n;
    } else {
      unsupported();
    }
  }
  return {square, free_part};
}

Num neg(Num a) {
  if (a.kind == Num::Kind::radical) {
    a.rad_coef = -a.rad_coef;
    return a;
  }
  for (auto& c : a.coeffs) c = -c;
  if (a.decimal) a.decimal->mantissa = -a.decimal->mantissa;
  return a;
}

std::string merged_var(const Num& a, const Num& b) {
  if (a.var.empty()) return b.var;
  if (b.var.empty() || a.var == b.var) return a.var;
  unsupported();
}

Num add(const Num& a, const Num& b) {
  if (a.kind == Num::Kind::poly && b.kind == Num::Kind::poly) {
    Num r;
    r.var = merged_var(a, b);
    r.coeffs.assign(std::max(a.coeffs.size(), b.coeffs.size()), BigRational(0));
    for (std::size_t i = 0; i < a.coeffs.size(); ++i) r.coeffs[i] += a.coeffs[i];
    for (std::size_t i = 0; i < b.coeffs.size(); ++i) r.coeffs[i] += b.coeffs[i];
    trim(r);
    return r;
  }
  if (a.kind == Num::Kind::radical && b.kind == Num::Kind::radical && a.radicand == b.radicand)
    return make_radical(a.rad_coef + b.rad_coef, a.radicand);
  if (a.kind == Num::Kind::radical && is_const(b) && const_value(b) == 0) return a;
  if (b.kind == Num::Kind::radical && is_const(a) && const_value(a) == 0) return b;
  unsupported();
}

Num mul(const Num& a, const Num& b) {
  if (a.kind == Num::Kind::poly && b.kind == Num::Kind::poly) {
    Num r;
    if (a.coeffs.empty() || b.coeffs.empty()) return r;
    r.var = merged_var(a, b);
    r.coeffs.assign(a.coeffs.size() + b.coeffs.size() - 1, BigRational(0));
    for (std::size_t i = 0; i < a.coeffs.size(); ++i)
      for (std::size_t j = 0; j < b.coeffs.size(); ++j) r.coeffs[i + j] += a.coeffs[i] * b.coeffs[j];
    trim(r);
    return r;
  }
  if (a.kind == Num::Kind::radical && b.kind == Num::Kind::radical) {
    const BigInt g = boost::multiprecision::gcd(a.radicand, b.radicand);
    return make_radical(a.rad_coef * b.rad_coef * g, (a.radicand / g) * (b.radicand / g));
  }
  const Num& rad = a.kind == Num::Kind::radical ? a : b;
  const Num& other = a.kind == Num::Kind::radical ? b : a;
  if (!is_const(other)) unsupported();
  return make_radical(rad.rad_coef * const_value(other), rad.radicand);
}

Num reciprocal(const Num& a) {
  if (a.kind == Num::Kind::radical) return make_radical(1 / (a.rad_coef * BigRational(a.radicand)), a.radicand);
  if (!is_const(a) || const_value(a) == 0) unsupported();
  return make_const(1 / const_value(a));
}

Num div(const Num& a, const Num& b) { return mul(a, reciprocal(b)); }

Num sqrt_num(const Num& a) {
  if (!is_const(a)) unsupported();
  const BigRational c = const_value(a);
  if (c < 0) unsupported();
  if (c == 0) return make_const(0);
  const BigInt p = numerator(c);
  const BigInt q = denominator(c);
  auto [square, free_part] = square_free_split(p * q);
  return make_radical(BigRational(square, q), free_part);
}

Num pow_num(const Num& base, const Num& exponent) {
  if (!is_const(exponent)) unsupported();
  const BigRational e = const_value(exponent);
  if (e == BigRational(1, 2)) return sqrt_num(base);
  if (denominator(e) != 1) unsupported();
  const BigInt k_big = numerator(e);
  if (k_big > 1000 || k_big < -1000) unsupported();
  const int k = k_big.convert_to<int>();
  if (k == 0) {
    if (is_const(base) && const_value(base) == 0) unsupported();
    return make_const(1);
  }
  if (k < 0) return reciprocal(pow_num(base, make_const(-k)));
  if (base.kind == Num::Kind::poly && !is_const(base) && k > 64) unsupported();
  Num result = make_const(1);
  Num factor = base;
  factor.decimal.reset();
  for (int i = 0; i < k; ++i) result = mul(result, factor);
  return result;
}

// ---------------------------------------------------------------------------
// Recursive-descent expression parser over normalized answer text.

class ExprParser {
 public:
  explicit ExprParser(std::string_view s) : s_(s) {}

  Num parse() {
    Num v = expr();
    skip_spaces();
    if (pos_ != s_.size()) unsupported();
    return v;
  }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;

  void skip_spaces() {
    while (pos_ < s_.size() && s_[pos_] == ' ') ++pos_;
  }
  char peek() {
    skip_spaces();
    return pos_ < s_.size() ? s_[pos_] : '\0';
  }
  bool accept(char c) {
    if (peek() == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!accept(c)) unsupported();
  }
  bool at_command(std::string_view name) {
    skip_spaces();
    if (s_.substr(pos_, 1 + name.size()) != std::string("\\").append(name)) return false;
    const std::size_t after = pos_ + 1 + name.size();
    return after >= s_.size() || !std::isalpha(static_cast<unsigned char>(s_[after]));
  }
  void consume_command(std::string_view name) { pos_ += 1 + name.size(); }

  bool starts_primary() {
    const char c = peek();
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.' || std::isalpha(static_cast<unsigned char>(c)) ||
        c == '(' || c == '{')
      return true;
    return at_command("frac") || at_command("sqrt") || at_command("pi");
  }

  Num expr() {
    Num v = term();
    for (;;) {
      if (accept('+')) {
        v = add(v, term());
      } else if (accept('-')) {
        v = add(v, neg(term()));
      } else {
        return v;
      }
    }
  }

  Num term() {
    Num v = unary();
    for (;;) {
      if (accept('*')) {
        v = mul(v, unary());
      } else if (accept('/')) {
        v = div(v, unary());
      } else if (starts_primary()) {
        v = mul(v, power());
      } else {
        return v;
      }
    }
  }

  Num unary() {
    if (accept('-')) return neg(unary());
    if (accept('+')) return unary();
    return power();
  }

  Num power() {
    Num base = postfix();
    while (accept('^')) base = pow_num(base, exponent());
    return base;
  }

  // LaTeX exponent: a braced group, or a single signed atom.
  Num exponent() {
    if (accept('{')) {
      Num e = expr();
      expect('}');
      return e;
    }
    if (accept('-')) return neg(exponent());
    if (accept('+')) return exponent();
    return atom_arg();
  }

  Num postfix() {
    Num p = primary();
    while (accept('%')) p = div(p, make_const(100));
    return p;
  }

  // \frac / \sqrt argument: a braced group or one character.
  Num atom_arg() {
    const char c = peek();
    if (c == '{') {
      ++pos_;
      Num v = expr();
      expect('}');
      return v;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      ++pos_;
      return make_const(c - '0');
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      ++pos_;
      return variable(std::string(1, c));
    }
    if (c == '\\' || c == '(') return primary();
    unsupported();
  }

  static Num variable(std::string name) {
    Num v;
    v.var = std::move(name);
    v.coeffs = {BigRational(0), BigRational(1)};
    return v;
  }

  Num number() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    const std::string int_part(s_.substr(start, pos_ - start));
    std::string frac_part;
    if (pos_ < s_.size() && s_[pos_] == '.') {
      ++pos_;
      const std::size_t fs = pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      frac_part = std::string(s_.substr(fs, pos_ - fs));
    }
    if (int_part.empty() && frac_part.empty()) unsupported();

    int exp10 = 0;
    bool scientific = false;
    if (pos_ + 1 < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
      std::size_t q = pos_ + 1;
      bool negative = false;
      if (s_[q] == '+' || s_[q] == '-') {
        negative = s_[q] == '-';
        ++q;
      }
      const std::size_t ds = q;
      while (q < s_.size() && std::isdigit(static_cast<unsigned char>(s_[q]))) ++q;
      if (q > ds && q - ds <= 4) {
        exp10 = std::stoi(std::string(s_.substr(ds, q - ds))) * (negative ? -1 : 1);
        scientific = true;
        pos_ = q;
      }
    }

    const BigInt mantissa = decimal_digits(int_part + frac_part);
    const auto scale = static_cast<int>(frac_part.size());
    const int shift = exp10 - scale;
    BigRational value(mantissa);
    if (shift > 0) value *= BigRational(boost::multiprecision::pow(BigInt(10), static_cast<unsigned>(shift)));
    if (shift < 0) value /= BigRational(boost::multiprecision::pow(BigInt(10), static_cast<unsigned>(-shift)));

    Num n = make_const(value);
    if (!scientific && scale > 0) n.decimal = Decimal{mantissa, static_cast<unsigned>(scale)};

    // Mixed number: 2\frac{1}{2} reads as 2 + 1/2.
    if (!scientific && scale == 0 && at_command("frac")) {
      const std::size_t save = pos_;
      consume_command("frac");
      try {
        Num a = atom_arg();
        Num b = atom_arg();
        if (is_const(a) && is_const(b) && denominator(const_value(a)) == 1 && denominator(const_value(b)) == 1 &&
            const_value(a) >= 0 && const_value(b) > 0) {
          return add(n, div(a, b));
        }
      } catch (const Unsupported&) {
      }
      pos_ = save;
    }
    return n;
  }

  Num primary() {
    const char c = peek();
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) {
      ++pos_;
      return variable(std::string(1, c));
    }
    if (c == '(') {
      ++pos_;
      Num v = expr();
      expect(')');
      v.decimal.reset();
      return v;
    }
    if (c == '{') {
      ++pos_;
      Num v = expr();
      expect('}');
      return v;
    }
    if (at_command("frac")) {
      consume_command("frac");
      Num a = atom_arg();
      Num b = atom_arg();
      return div(a, b);
    }
    if (at_command("sqrt")) {
      consume_command("sqrt");
      if (accept('[')) {
        Num index = expr();
        expect(']');
        if (!is_const(index) || const_value(index) != 2) unsupported();
      }
      return sqrt_num(atom_arg());
    }
    if (at_command("pi")) {
      consume_command("pi");
      return variable("\\pi");
    }
    unsupported();
  }
};

// ---------------------------------------------------------------------------
// Num -> MathValue and canonical printing.

MathValue from_constant(const BigRational& c) {
  if (denominator(c) == 1) return MathValue{Integer{numerator(c)}};
  return MathValue{Rational{c}};
}

MathValue to_value(const Num& n) {
  if (n.kind == Num::Kind::radical) return MathValue{Radical{n.rad_coef, n.radicand}};
  if (n.coeffs.size() <= 1) {
    if (n.decimal) return MathValue{*n.decimal};
    return from_constant(const_value(n));
  }
  return MathValue{Polynomial{n.var, n.coeffs}};
}

std::string rat_str(const BigRational& r) {
  if (denominator(r) == 1) return numerator(r).str();
  return numerator(r).str() + "/" + denominator(r).str();
}

std::string decimal_str(const Decimal& d) {
  const bool negative = d.mantissa < 0;
  std::string digits = (negative ? BigInt(-d.mantissa) : d.mantissa).str();
  if (digits.size() < d.scale + 1) digits.insert(0, d.scale + 1 - digits.size(), '0');
  digits.insert(digits.size() - d.scale, ".");
  return (negative ? "-" : "") + digits;
}

std::string monomial(const std::string& var, std::size_t power) {
  if (power == 1) return var;
  if (power < 10) return var + "^" + std::to_string(power);
  return var + "^{" + std::to_string(power) + "}";
}

std::string polynomial_str(const Polynomial& p) {
  std::string out;
  for (std::size_t k = p.coefficients.size(); k-- > 0;) {
    const BigRational& c = p.coefficients[k];
    if (c == 0) continue;
    const bool negative = c < 0;
    const BigRational mag = negative ? BigRational(-c) : c;
    if (out.empty()) {
      if (negative) out += "-";
    } else {
      out += negative ? "-" : "+";
    }
    if (k == 0) {
      out += rat_str(mag);
    } else if (mag == 1) {
      out += monomial(p.variable, k);
    } else {
      out += rat_str(mag) + "*" + monomial(p.variable, k);
    }
  }
  return out;
}

std::string radical_str(const Radical& r) {
  const std::string root = "\\sqrt{" + r.radicand.str() + "}";
  if (r.coefficient == 1) return root;
  if (r.coefficient == -1) return "-" + root;
  return rat_str(r.coefficient) + "*" + root;
}

std::string join_items(const std::vector<MathValue>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ",";
    out += canonical(items[i]);
  }
  return out;
}

std::optional<BigRational> rational_value(const MathValue& v) {
  if (v.is<Integer>()) return BigRational(v.as<Integer>().value);
  if (v.is<Rational>()) return v.as<Rational>().value;
  if (v.is<Decimal>()) {
    const auto& d = v.as<Decimal>();
    return BigRational(d.mantissa, boost::multiprecision::pow(BigInt(10), d.scale));
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Structural parsing: containers, then expressions, else Symbolic.

bool is_opener(char c) { return c == '(' || c == '[' || c == '{'; }
bool is_closer(char c) { return c == ')' || c == ']' || c == '}'; }

// Index of the bracket matching s[open], treating ([{ and )]} alike.
std::optional<std::size_t> matching_close(std::string_view s, std::size_t open) {
  int depth = 0;
  for (std::size_t i = open; i < s.size(); ++i) {
    if (is_opener(s[i])) ++depth;
    if (is_closer(s[i])) {
      --depth;
      if (depth == 0) return i;
    }
  }
  return std::nullopt;
}

std::vector<std::string> split_top_level(std::string_view s) {
  std::vector<std::string> parts;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (is_opener(s[i])) ++depth;
    if (is_closer(s[i])) --depth;
    if (s[i] == ',' && depth == 0) {
      parts.emplace_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  parts.emplace_back(s.substr(start));
  return parts;
}

bool is_thousands_group(const std::string& part, bool last) {
  if (part.size() < 3) return false;
  for (std::size_t i = 0; i < 3; ++i)
    if (!std::isdigit(static_cast<unsigned char>(part[i]))) return false;
  if (part.size() == 3) return true;
  if (!last || part[3] != '.' || part.size() == 4) return false;
  for (std::size_t i = 4; i < part.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(part[i]))) return false;
  return true;
}

bool looks_like_thousands(const std::vector<std::string>& parts) {
  if (parts.size() < 2) return false;
  const auto& head = parts.front();
  std::size_t digits_from = (!head.empty() && head[0] == '-') ? 1 : 0;
  const std::size_t len = head.size() - digits_from;
  if (len < 1 || len > 3) return false;
  for (std::size_t i = digits_from; i < head.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(head[i]))) return false;
  for (std::size_t i = 1; i < parts.size(); ++i)
    if (!is_thousands_group(parts[i], i + 1 == parts.size())) return false;
  return true;
}

bool is_infinity(std::string_view s, bool& negative) {
  negative = false;
  if (s == "\\infty" || s == "+\\infty" || s == "\\infinity") return true;
  if (s == "-\\infty") {
    negative = true;
    return true;
  }
  return false;
}

MathValue parse_value(std::string_view s);

std::optional<std::vector<MathValue>> parse_items(const std::vector<std::string>& parts) {
  std::vector<MathValue> items;
  for (const auto& p : parts) {
    if (p.empty()) return std::nullopt;
    items.push_back(parse_value(p));
  }
  return items;
}

MathValue make_set(std::vector<MathValue> items) {
  std::vector<std::tuple<int, double, std::string, std::size_t>> keys;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto num = numeric_value(items[i]);
    keys.emplace_back(num ? 0 : 1, num.value_or(0.0), canonical(items[i]), i);
  }
  std::sort(keys.begin(), keys.end());
  FiniteSet set;
  std::string last;
  for (const auto& [rank, value, text, index] : keys) {
    if (!set.items.empty() && text == last) continue;
    set.items.push_back(items[index]);
    last = text;
  }
  return MathValue{std::move(set)};
}

std::optional<MathValue> parse_container(std::string_view s) {
  if (s == "\\emptyset" || s == "\\varnothing" || s == "\\{\\}") return MathValue{FiniteSet{}};

  // \{ ... \}
  if (s.size() >= 4 && s.substr(0, 2) == "\\{" && s.substr(s.size() - 2) == "\\}") {
    auto close = matching_close(s, 1);
    if (close && *close == s.size() - 1) {
      const auto inner = s.substr(2, s.size() - 4);
      if (inner.empty()) return MathValue{FiniteSet{}};
      auto items = parse_items(split_top_level(inner));
      if (!items) return std::nullopt;
      return make_set(std::move(*items));
    }
  }

  if (s.size() >= 2 && is_opener(s.front())) {
    auto close = matching_close(s, 0);
    if (close && *close == s.size() - 1) {
      const char open = s.front();
      const char shut = s.back();
      const auto parts = split_top_level(s.substr(1, s.size() - 2));
      if (parts.size() >= 2) {
        if (open == '{' && shut == '}') {
          auto items = parse_items(parts);
          if (!items) return std::nullopt;
          return make_set(std::move(*items));
        }
        bool lo_inf = false;
        bool hi_inf = false;
        bool lo_neg = false;
        bool hi_neg = false;
        if (parts.size() == 2) {
          lo_inf = is_infinity(parts[0], lo_neg);
          hi_inf = is_infinity(parts[1], hi_neg);
        }
        const bool square = open == '[' || shut == ']';
        if (parts.size() == 2 && (square || lo_inf || hi_inf) && (open == '(' || open == '[') &&
            (shut == ')' || shut == ']')) {
          if ((lo_inf && !lo_neg) || (hi_inf && hi_neg)) return std::nullopt;
          if (parts[0].empty() || parts[1].empty()) return std::nullopt;
          Interval iv;
          iv.lo_closed = open == '[' && !lo_inf;
          iv.hi_closed = shut == ']' && !hi_inf;
          if (!lo_inf) iv.lo = parse_value(parts[0]);
          if (!hi_inf) iv.hi = parse_value(parts[1]);
          return MathValue{std::move(iv)};
        }
        if (open == '(' && shut == ')') {
          auto items = parse_items(parts);
          if (!items) return std::nullopt;
          return MathValue{Tuple{std::move(*items)}};
        }
        return std::nullopt;
      }
    }
  }

  const auto parts = split_top_level(s);
  if (parts.size() >= 2) {
    if (looks_like_thousands(parts)) {
      std::string joined;
      for (const auto& p : parts) joined += p;
      try {
        return to_value(ExprParser(joined).parse());
      } catch (const Unsupported&) {
        return std::nullopt;
      }
    }
    auto items = parse_items(parts);
    if (!items) return std::nullopt;
    return make_set(std::move(*items));
  }
  return std::nullopt;
}

MathValue parse_value(std::string_view s) {
  if (auto container = parse_container(s)) return std::move(*container);
  if (split_top_level(s).size() < 2) {
    try {
      return to_value(ExprParser(s).parse());
    } catch (const Unsupported&) {
    }
  }
  return MathValue{Symbolic{std::string(s)}};
}

// ---------------------------------------------------------------------------
// Normalization helpers.

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  if (from.empty()) return;
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
}

// Removes "\name" when it is a whole control word (not a prefix of one).
void remove_command(std::string& s, std::string_view name) {
  const std::string word = "\\" + std::string(name);
  std::size_t pos = 0;
  while ((pos = s.find(word, pos)) != std::string::npos) {
    const std::size_t after = pos + word.size();
    if (after < s.size() && std::isalpha(static_cast<unsigned char>(s[after]))) {
      pos = after;
      continue;
    }
    s.erase(pos, word.size());
  }
}

void rename_command(std::string& s, std::string_view from, std::string_view to) {
  const std::string word = "\\" + std::string(from);
  const std::string repl = "\\" + std::string(to);
  std::size_t pos = 0;
  while ((pos = s.find(word, pos)) != std::string::npos) {
    const std::size_t after = pos + word.size();
    if (after < s.size() && std::isalpha(static_cast<unsigned char>(s[after]))) {
      pos = after;
      continue;
    }
    s.replace(pos, word.size(), repl);
    pos += repl.size();
  }
}

// "\text{abc}" -> "abc" for wrapper commands whose argument is braced.
void unwrap_command(std::string& s, std::string_view name) {
  const std::string word = "\\" + std::string(name) + "{";
  std::size_t pos = 0;
  while ((pos = s.find(word, pos)) != std::string::npos) {
    const std::size_t open = pos + word.size() - 1;
    int depth = 0;
    std::size_t close = std::string::npos;
    for (std::size_t i = open; i < s.size(); ++i) {
      if (s[i] == '{') ++depth;
      if (s[i] == '}' && --depth == 0) {
        close = i;
        break;
      }
    }
    if (close == std::string::npos) return;
    s = s.substr(0, pos) + s.substr(open + 1, close - open - 1) + s.substr(close + 1);
  }
}

std::string strip_spaces(const std::string& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != ' ') {
      out.push_back(s[i]);
      continue;
    }
    // keep a space only where it separates a control word from a letter
    std::size_t k = out.size();
    while (k > 0 && std::isalpha(static_cast<unsigned char>(out[k - 1]))) --k;
    const bool after_control_word = k > 0 && k < out.size() && out[k - 1] == '\\';
    std::size_t next = i;
    while (next < s.size() && s[next] == ' ') ++next;
    if (after_control_word && next < s.size() && std::isalpha(static_cast<unsigned char>(s[next]))) out.push_back(' ');
    i = next - 1;
  }
  return out;
}

std::string normalize_once(std::string s) {
  replace_all(s, "\xE2\x88\x92", "-");  // U+2212 minus sign
  replace_all(s, "\xC3\x97", "*");      // U+00D7
  replace_all(s, "\xC3\xB7", "/");      // U+00F7
  replace_all(s, "\xC2\xB0", "");       // degree sign
  replace_all(s, "$", "");
  replace_all(s, "{,}", "");
  replace_all(s, "\\%", "%");
  replace_all(s, "\\!", "");
  replace_all(s, "\\,", " ");
  replace_all(s, "\\;", " ");
  replace_all(s, "\\:", " ");
  replace_all(s, "\\ ", " ");
  replace_all(s, "~", " ");
  replace_all(s, "^{\\circ}", "");
  replace_all(s, "^\\circ", "");
  for (auto w : {"text", "textbf", "mathrm", "mathbf", "mbox", "textrm", "boldsymbol"}) unwrap_command(s, w);
  replace_all(s, "\\left.", "");
  replace_all(s, "\\right.", "");
  for (auto w : {"left", "right", "displaystyle", "bigl", "bigr", "Bigl", "Bigr", "big", "Big"}) remove_command(s, w);
  rename_command(s, "dfrac", "frac");
  rename_command(s, "tfrac", "frac");
  rename_command(s, "cdot", "*");
  rename_command(s, "times", "*");
  rename_command(s, "div", "/");
  replace_all(s, "\\*", "*");
  replace_all(s, "\\/", "/");
  s = normalize_nfkc(s);
  s = strip_spaces(s);
  while (!s.empty() && (s.back() == '.' || s.back() == ' ')) s.pop_back();
  while (!s.empty() && s.front() == ' ') s.erase(0, 1);
  // "x=5" -> "5"
  if (s.size() >= 3 && std::isalpha(static_cast<unsigned char>(s[0])) && s[1] == '=' &&
      s.find('=', 2) == std::string::npos)
    s = s.substr(2);
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------

std::string canonical(const MathValue& v) {
  return std::visit(
      [](const auto& node) -> std::string {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, Integer>) {
          return node.value.str();
        } else if constexpr (std::is_same_v<T, Rational>) {
          return rat_str(node.value);
        } else if constexpr (std::is_same_v<T, Decimal>) {
          return decimal_str(node);
        } else if constexpr (std::is_same_v<T, Radical>) {
          return radical_str(node);
        } else if constexpr (std::is_same_v<T, Polynomial>) {
          return polynomial_str(node);
        } else if constexpr (std::is_same_v<T, Tuple>) {
          return "(" + join_items(node.items) + ")";
        } else if constexpr (std::is_same_v<T, FiniteSet>) {
          return "\\{" + join_items(node.items) + "\\}";
        } else if constexpr (std::is_same_v<T, Interval>) {
          std::string out = node.lo_closed ? "[" : "(";
          out += node.lo ? canonical(**node.lo) : "-\\infty";
          out += ",";
          out += node.hi ? canonical(**node.hi) : "\\infty";
          out += node.hi_closed ? "]" : ")";
          return out;
        } else {
          return node.text;
        }
      },
      v.node);
}

bool operator==(const MathValue& a, const MathValue& b) {
  return a.node.index() == b.node.index() && canonical(a) == canonical(b);
}

std::optional<double> numeric_value(const MathValue& v) {
  if (auto r = rational_value(v)) return r->convert_to<double>();
  if (v.is<Radical>()) {
    const auto& r = v.as<Radical>();
    return r.coefficient.convert_to<double>() * std::sqrt(r.radicand.convert_to<double>());
  }
  if (v.is<Polynomial>() && v.as<Polynomial>().variable == "\\pi") {
    const auto& p = v.as<Polynomial>();
    double acc = 0.0;
    for (std::size_t k = p.coefficients.size(); k-- > 0;) acc = acc * std::numbers::pi + p.coefficients[k].convert_to<double>();
    return acc;
  }
  return std::nullopt;
}

std::string normalize_answer(std::string_view raw) {
  std::string s(raw);
  for (int i = 0; i < 8; ++i) {
    std::string next = normalize_once(s);
    if (next == s) break;
    s = std::move(next);
  }
  return s;
}

std::optional<MathValue> parse_math(std::string_view src) {
  const std::string s = normalize_answer(src);
  if (s.empty()) return std::nullopt;
  return parse_value(s);
}

std::optional<std::string> extract_final_answer(std::string_view response) {
  std::size_t boxed = std::string_view::npos;
  std::size_t command_len = 0;
  for (std::string_view cmd : {"\\boxed", "\\fbox"}) {
    const std::size_t at = response.rfind(cmd);
    if (at != std::string_view::npos && (boxed == std::string_view::npos || at > boxed)) {
      boxed = at;
      command_len = cmd.size();
    }
  }
  auto clean = [](std::string_view t) -> std::optional<std::string> {
    std::string s(t);
    auto is_trim = [](char c) { return c == ' ' || c == '\t' || c == ':' || c == '$' || c == '\r'; };
    while (!s.empty() && is_trim(s.front())) s.erase(0, 1);
    for (;;) {
      if (!s.empty() && (is_trim(s.back()) || s.back() == '.')) {
        s.pop_back();
      } else if (s.size() >= 3 && s.compare(s.size() - 3, 3, "\xE3\x80\x82") == 0) {  // 。
        s.resize(s.size() - 3);
      } else {
        break;
      }
    }
    if (s.empty()) return std::nullopt;
    return s;
  };

  if (boxed != std::string_view::npos) {
    std::size_t i = boxed + command_len;
    while (i < response.size() && response[i] == ' ') ++i;
    if (i < response.size() && response[i] == '{') {
      int depth = 0;
      for (std::size_t k = i; k < response.size(); ++k) {
        if (response[k] == '{') ++depth;
        if (response[k] == '}' && --depth == 0) {
          auto inner = std::string(response.substr(i + 1, k - i - 1));
          if (inner.find_first_not_of(' ') == std::string::npos) return std::nullopt;
          return inner;
        }
      }
      return std::nullopt;  // unbalanced
    }
    std::size_t end = i;
    while (end < response.size() && response[end] != ' ' && response[end] != '$' && response[end] != '\n') ++end;
    return clean(response.substr(i, end - i));
  }

  std::size_t marker = std::string_view::npos;
  std::size_t marker_len = 0;
  std::string lowered(response);
  for (auto& c : lowered) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  for (std::string_view m : {std::string_view("answer is"), std::string_view("\xE7\xAD\x94\xE6\xA1\x88\xE6\x98\xAF")}) {
    const std::size_t at = lowered.rfind(m);
    if (at != std::string::npos && (marker == std::string_view::npos || at > marker)) {
      marker = at;
      marker_len = m.size();
    }
  }
  if (marker != std::string_view::npos) {
    const std::size_t from = marker + marker_len;
    std::size_t end = response.find('\n', from);
    if (end == std::string_view::npos) end = response.size();
    return clean(response.substr(from, end - from));
  }

  std::size_t end = response.size();
  while (end > 0 && (response[end - 1] == '\n' || response[end - 1] == ' ' || response[end - 1] == '\r')) --end;
  const std::size_t line_start = response.rfind('\n', end == 0 ? 0 : end - 1);
  const std::size_t from = line_start == std::string_view::npos ? 0 : line_start + 1;
  const auto last_line = response.substr(from, end - from);
  const std::size_t eq = last_line.rfind('=');
  if (eq == std::string_view::npos) return std::nullopt;
  return clean(last_line.substr(eq + 1));
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Equivalent: return "Equivalent";
    case Verdict::Different: return "Different";
    case Verdict::Unparseable: return "Unparseable";
  }
  return "Unparseable";
}

std::string_view to_string(VerifyMethod m) {
  switch (m) {
    case VerifyMethod::symbolic: return "symbolic";
    case VerifyMethod::numeric: return "numeric";
    case VerifyMethod::string: return "string";
  }
  return "symbolic";
}

namespace {

VerifyOutcome equivalent(VerifyMethod m, std::string detail) { return {Verdict::Equivalent, m, std::move(detail)}; }
VerifyOutcome different(VerifyMethod m, std::string detail) { return {Verdict::Different, m, std::move(detail)}; }

VerifyMethod stronger(VerifyMethod a, VerifyMethod b) { return static_cast<int>(a) >= static_cast<int>(b) ? a : b; }

// Every element of `from` matched to a distinct equivalent element of `to`.
bool match_all(const std::vector<MathValue>& from, const std::vector<MathValue>& to, VerifyMethod& method) {
  std::vector<bool> used(to.size(), false);
  for (const auto& x : from) {
    bool found = false;
    for (std::size_t j = 0; j < to.size() && !found; ++j) {
      if (used[j]) continue;
      const auto r = check_equivalence(x, to[j]);
      if (r.verdict == Verdict::Equivalent) {
        used[j] = true;
        found = true;
        method = stronger(method, r.method);
      }
    }
    if (!found) return false;
  }
  return true;
}

}  // namespace

VerifyOutcome check_equivalence(const MathValue& a, const MathValue& b) {
  const std::string ca = canonical(a);
  const std::string cb = canonical(b);
  if (a.node.index() == b.node.index() && ca == cb) {
    return equivalent(a.is<Symbolic>() ? VerifyMethod::string : VerifyMethod::symbolic, "canonical forms equal: " + ca);
  }

  if (a.is<Tuple>() && b.is<Tuple>()) {
    const auto& x = a.as<Tuple>().items;
    const auto& y = b.as<Tuple>().items;
    if (x.size() != y.size()) return different(VerifyMethod::symbolic, "tuple sizes differ");
    VerifyMethod method = VerifyMethod::symbolic;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const auto r = check_equivalence(x[i], y[i]);
      if (r.verdict != Verdict::Equivalent) return different(r.method, "tuple element " + std::to_string(i) + " differs");
      method = stronger(method, r.method);
    }
    return equivalent(method, "tuples match element-wise");
  }
  if (a.is<FiniteSet>() && b.is<FiniteSet>()) {
    const auto& x = a.as<FiniteSet>().items;
    const auto& y = b.as<FiniteSet>().items;
    if (x.size() != y.size()) return different(VerifyMethod::symbolic, "set sizes differ");
    VerifyMethod method = VerifyMethod::symbolic;
    if (match_all(x, y, method) && match_all(y, x, method)) return equivalent(method, "sets match element-wise");
    return different(VerifyMethod::symbolic, "set elements differ");
  }
  if (a.is<Interval>() && b.is<Interval>()) {
    const auto& x = a.as<Interval>();
    const auto& y = b.as<Interval>();
    if (x.lo_closed != y.lo_closed || x.hi_closed != y.hi_closed || x.lo.has_value() != y.lo.has_value() ||
        x.hi.has_value() != y.hi.has_value())
      return different(VerifyMethod::symbolic, "interval bounds differ");
    VerifyMethod method = VerifyMethod::symbolic;
    for (auto [p, q] : {std::pair{&x.lo, &y.lo}, std::pair{&x.hi, &y.hi}}) {
      if (!p->has_value()) continue;
      const auto r = check_equivalence(***p, ***q);
      if (r.verdict != Verdict::Equivalent) return different(r.method, "interval endpoints differ");
      method = stronger(method, r.method);
    }
    return equivalent(method, "intervals match");
  }

  const auto ra = rational_value(a);
  const auto rb = rational_value(b);
  if (ra && rb) {
    const BigRational diff = boost::multiprecision::abs(*ra - *rb);
    const BigRational scale = std::max(boost::multiprecision::abs(*ra), boost::multiprecision::abs(*rb));
    const bool close = diff * BigRational(1000000000) <= scale || diff * BigRational(1000000000000LL) <= 1;
    if (close) return equivalent(VerifyMethod::numeric, "exact values agree within tolerance: " + ca + " vs " + cb);
    return different(VerifyMethod::numeric, "values differ: " + ca + " vs " + cb);
  }
  const auto na = numeric_value(a);
  const auto nb = numeric_value(b);
  if (na && nb) {
    const double diff = std::abs(*na - *nb);
    const double tol = std::max(kRelativeTolerance * std::max(std::abs(*na), std::abs(*nb)), kAbsoluteTolerance);
    if (diff <= tol) return equivalent(VerifyMethod::numeric, "numeric values agree within tolerance");
    return different(VerifyMethod::numeric, "numeric values differ: " + ca + " vs " + cb);
  }

  if (a.is<Symbolic>() && b.is<Symbolic>()) return different(VerifyMethod::string, "strings differ: " + ca + " vs " + cb);
  return different(VerifyMethod::symbolic, "forms differ: " + ca + " vs " + cb);
}

VerifyOutcome check_equivalence(const std::optional<MathValue>& a, const std::optional<MathValue>& b) {
  if (!a && !b) return {Verdict::Unparseable, VerifyMethod::symbolic, "both sides unparseable"};
  if (!a) return {Verdict::Unparseable, VerifyMethod::symbolic, "candidate unparseable"};
  if (!b) return {Verdict::Unparseable, VerifyMethod::symbolic, "reference unparseable"};
  return check_equivalence(*a, *b);
}

std::optional<MathValue> parse_reference(std::string_view gold) {
  if (gold.find("\\boxed") != std::string_view::npos || gold.find("\\fbox") != std::string_view::npos) {
    auto inner = extract_final_answer(gold);
    if (!inner) return std::nullopt;
    return parse_math(*inner);
  }
  return parse_math(gold);
}

VerifyOutcome verify_response(std::string_view response, std::string_view gold) {
  const auto answer = extract_final_answer(response);
  if (!answer) return {Verdict::Unparseable, VerifyMethod::symbolic, "no final answer found"};
  return check_equivalence(parse_math(*answer), parse_reference(gold));
}

int binary_reward(std::string_view response, std::string_view gold) {
  if (gold.empty()) return -1;
  return verify_response(response, gold).verdict == Verdict::Equivalent ? 1 : -1;
}

}  // namespace mathcur
