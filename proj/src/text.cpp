#include "mathcur/text.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <cctype>
#include <stdexcept>

#include "mathcur/common.hpp"

namespace mathcur {

namespace {

const icu::Normalizer2& nfkc_casefold() {
  static const icu::Normalizer2* instance = [] {
    UErrorCode status = U_ZERO_ERROR;
    const auto* n = icu::Normalizer2::getNFKCCasefoldInstance(status);
    if (U_FAILURE(status)) throw std::runtime_error("ICU NFKC_Casefold unavailable");
    return n;
  }();
  return *instance;
}

const icu::Normalizer2& nfkc() {
  static const icu::Normalizer2* instance = [] {
    UErrorCode status = U_ZERO_ERROR;
    const auto* n = icu::Normalizer2::getNFKCInstance(status);
    if (U_FAILURE(status)) throw std::runtime_error("ICU NFKC unavailable");
    return n;
  }();
  return *instance;
}

std::string apply(const icu::Normalizer2& normalizer, std::string_view text) {
  UErrorCode status = U_ZERO_ERROR;
  const auto src = icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  const auto dst = normalizer.normalize(src, status);
  if (U_FAILURE(status)) throw InputError("unicode normalization failed");
  std::string out;
  dst.toUTF8String(out);
  return out;
}

bool is_space(UChar32 c) { return u_isUWhiteSpace(c) != 0 || c == 0x200B; }

std::string collapse_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  int32_t i = 0;
  const auto* s = reinterpret_cast<const uint8_t*>(text.data());
  const auto len = static_cast<int32_t>(text.size());
  while (i < len) {
    const int32_t start = i;
    UChar32 c;
    U8_NEXT(s, i, len, c);
    if (c >= 0 && is_space(c)) {
      pending_space = true;
      continue;
    }
    if (pending_space && !out.empty()) out.push_back(' ');
    pending_space = false;
    out.append(text.substr(static_cast<std::size_t>(start), static_cast<std::size_t>(i - start)));
  }
  return out;
}

bool is_ideograph(UChar32 c) {
  return u_hasBinaryProperty(c, UCHAR_IDEOGRAPHIC) != 0 ||
         ublock_getCode(c) == UBLOCK_HIRAGANA || ublock_getCode(c) == UBLOCK_KATAKANA;
}

}  // namespace

bool is_valid_utf8(std::string_view text) {
  int32_t i = 0;
  const auto* s = reinterpret_cast<const uint8_t*>(text.data());
  const auto len = static_cast<int32_t>(text.size());
  while (i < len) {
    UChar32 c;
    U8_NEXT(s, i, len, c);
    if (c < 0) return false;
  }
  return true;
}

std::string normalize_text(std::string_view text) { return collapse_whitespace(apply(nfkc_casefold(), text)); }

std::string normalize_nfkc(std::string_view text) { return collapse_whitespace(apply(nfkc(), text)); }

std::vector<std::string> scan_tokens(std::string_view normalized) {
  std::vector<std::string> tokens;
  std::string run;
  auto flush = [&] {
    if (!run.empty()) tokens.push_back(std::move(run));
    run.clear();
  };
  int32_t i = 0;
  const auto* s = reinterpret_cast<const uint8_t*>(normalized.data());
  const auto len = static_cast<int32_t>(normalized.size());
  while (i < len) {
    const int32_t start = i;
    UChar32 c;
    U8_NEXT(s, i, len, c);
    const auto piece = normalized.substr(static_cast<std::size_t>(start), static_cast<std::size_t>(i - start));
    if (c < 0 || is_space(c)) {
      flush();
    } else if (is_ideograph(c)) {
      flush();
      tokens.emplace_back(piece);
    } else if (u_isalnum(c)) {
      run.append(piece);
    } else {
      flush();
      tokens.emplace_back(piece);
    }
  }
  flush();
  return tokens;
}

std::vector<std::string> tokenize_for_matching(std::string_view text) { return scan_tokens(normalize_text(text)); }

std::size_t MathWhitespaceCounter::count(std::string_view text) const {
  const std::string norm = normalize_nfkc(text);
  std::size_t total = 0;
  std::size_t pos = 0;
  while (pos < norm.size()) {
    std::size_t end = norm.find(' ', pos);
    if (end == std::string::npos) end = norm.size();
    const std::string_view unit(norm.data() + pos, end - pos);
    bool residue = false;
    for (std::size_t k = 0; k < unit.size();) {
      const char c = unit[k];
      if (c == '\\') {
        ++total;
        ++k;
        if (k < unit.size() && std::isalpha(static_cast<unsigned char>(unit[k]))) {
          while (k < unit.size() && std::isalpha(static_cast<unsigned char>(unit[k]))) ++k;
        } else if (k < unit.size()) {
          ++k;
        }
      } else if (c >= '0' && c <= '9') {
        ++total;
        while (k < unit.size() && unit[k] >= '0' && unit[k] <= '9') ++k;
      } else {
        residue = true;
        ++k;
      }
    }
    if (residue) ++total;
    pos = end + 1;
  }
  return total;
}

const TokenCounter& default_token_counter() {
  static const MathWhitespaceCounter counter;
  return counter;
}

}  // namespace mathcur
