#ifndef MATHCUR_MATHVERIFY_HPP_
#define MATHCUR_MATHVERIFY_HPP_

#include <boost/multiprecision/cpp_int.hpp>

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace mathcur {

using BigInt = boost::multiprecision::cpp_int;
using BigRational = boost::multiprecision::cpp_rational;

/// Copyable owning pointer, used where MathValue nests itself by value.
template <typename T>
class Boxed {
 public:
  Boxed(T value) : ptr_(std::make_unique<T>(std::move(value))) {}  // NOLINT(google-explicit-constructor)
  Boxed(const Boxed& other) : ptr_(std::make_unique<T>(*other.ptr_)) {}
  Boxed(Boxed&&) noexcept = default;
  Boxed& operator=(const Boxed& other) {
    if (this != &other) ptr_ = std::make_unique<T>(*other.ptr_);
    return *this;
  }
  Boxed& operator=(Boxed&&) noexcept = default;

  const T& operator*() const { return *ptr_; }
  const T* operator->() const { return ptr_.get(); }

 private:
  std::unique_ptr<T> ptr_;
};

struct MathValue;

struct Integer {
  BigInt value;
};

/// Lowest terms, denominator > 1 (denominator 1 canonicalizes to Integer).
struct Rational {
  BigRational value;
};

/// mantissa / 10^scale with scale >= 1; "0.50" keeps scale 2.
struct Decimal {
  BigInt mantissa;
  unsigned scale = 1;
};

/// coefficient * sqrt(radicand), radicand square-free and > 1.
struct Radical {
  BigRational coefficient;
  BigInt radicand;
};

/// Single-variable polynomial, coefficients in ascending powers, degree >= 1
/// and nonzero leading coefficient. The variable "\pi" stands for the
/// constant and keeps the value numerically comparable.
struct Polynomial {
  std::string variable;
  std::vector<BigRational> coefficients;
};

struct Tuple {
  std::vector<MathValue> items;
};

/// Sorted by canonical order, no duplicates.
struct FiniteSet {
  std::vector<MathValue> items;
};

/// A missing bound means infinite on that side.
struct Interval {
  std::optional<Boxed<MathValue>> lo;
  std::optional<Boxed<MathValue>> hi;
  bool lo_closed = false;
  bool hi_closed = false;
};

/// Anything outside the grammar, kept as a normalized string.
struct Symbolic {
  std::string text;
};

struct MathValue {
  std::variant<Integer, Rational, Decimal, Radical, Polynomial, Tuple, FiniteSet, Interval, Symbolic> node;

  template <typename T>
  bool is() const {
    return std::holds_alternative<T>(node);
  }
  template <typename T>
  const T& as() const {
    return std::get<T>(node);
  }
};

/// Canonical serialization. parse_math(canonical(v)) reproduces v exactly.
std::string canonical(const MathValue& v);

/// Structural equality, i.e. equal canonical forms.
bool operator==(const MathValue& a, const MathValue& b);

/// Numeric value for Integer, Rational, Decimal, Radical and polynomials in
/// \pi; nullopt for everything else.
std::optional<double> numeric_value(const MathValue& v);

/// String cleanup applied before parsing: NFKC, \dfrac -> \frac, \left/\right
/// and \text{} wrappers dropped, "$" and spacing commands removed, a leading
/// "x=" stripped. Idempotent.
std::string normalize_answer(std::string_view raw);

/// Parses a final answer. Returns nullopt only when nothing is left after
/// normalization; any other input yields at least Symbolic(normalized text).
std::optional<MathValue> parse_math(std::string_view src);

/// Content of the last \boxed{...}; otherwise the text after the last
/// "answer is" / "答案是"; otherwise what follows "=" on the final line.
/// An unbalanced last \boxed gives nullopt.
std::optional<std::string> extract_final_answer(std::string_view response);

enum class Verdict { Equivalent, Different, Unparseable };
enum class VerifyMethod { symbolic, numeric, string };

std::string_view to_string(Verdict v);
std::string_view to_string(VerifyMethod m);

struct VerifyOutcome {
  Verdict verdict = Verdict::Unparseable;
  VerifyMethod method = VerifyMethod::symbolic;
  std::string detail;
};

inline constexpr double kRelativeTolerance = 1e-9;
inline constexpr double kAbsoluteTolerance = 1e-12;

/// Tiers in order: canonical (symbolic) equality, numeric agreement within
/// 1e-9 relative / 1e-12 absolute, then normalized-string equality between
/// two Symbolic values. Tuples, sets and intervals compare element-wise.
VerifyOutcome check_equivalence(const MathValue& a, const MathValue& b);
VerifyOutcome check_equivalence(const std::optional<MathValue>& a, const std::optional<MathValue>& b);

/// The reference side of a comparison: a gold string that itself contains a
/// \boxed answer is reduced to that answer first.
std::optional<MathValue> parse_reference(std::string_view gold);

/// Extract, parse and compare a response against a gold answer.
VerifyOutcome verify_response(std::string_view response, std::string_view gold);

/// +1 iff the response's final answer is equivalent to gold, otherwise -1.
int binary_reward(std::string_view response, std::string_view gold);

}  // namespace mathcur

#endif  // MATHCUR_MATHVERIFY_HPP_
