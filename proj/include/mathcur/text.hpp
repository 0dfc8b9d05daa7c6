#ifndef MATHCUR_TEXT_HPP_
#define MATHCUR_TEXT_HPP_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace mathcur {

bool is_valid_utf8(std::string_view text);

/// NFKC + Unicode case folding, whitespace runs collapsed to one ASCII space,
/// trimmed. This is the comparison key used by dedup and decontamination.
std::string normalize_text(std::string_view text);

/// NFKC without case folding, whitespace collapsed. Used before counting.
std::string normalize_nfkc(std::string_view text);

/// Splits already-normalized text into scan tokens: maximal alphanumeric runs,
/// one token per ideograph, one token per other non-space character.
std::vector<std::string> scan_tokens(std::string_view normalized);

/// Convenience: scan_tokens(normalize_text(text)).
std::vector<std::string> tokenize_for_matching(std::string_view text);

/// Token counting strategy. Length thresholds everywhere in the toolkit are
/// interpreted under whichever counter is active.
class TokenCounter {
 public:
  virtual ~TokenCounter() = default;
  virtual std::size_t count(std::string_view text) const = 0;
};

/// Default counter: whitespace-delimited units after NFKC. Inside each unit,
/// every LaTeX control sequence and every digit run counts on its own, and
/// whatever characters remain count as one more unit.
///
///   "\frac{1}{2} + x"  ->  \frac | 1 | 2 | {}{} | + | x  = 6
class MathWhitespaceCounter final : public TokenCounter {
 public:
  std::size_t count(std::string_view text) const override;
};

const TokenCounter& default_token_counter();

inline std::size_t count_tokens(std::string_view text,
                                const TokenCounter& counter = default_token_counter()) {
  return counter.count(text);
}

}  // namespace mathcur

#endif  // MATHCUR_TEXT_HPP_
