#pragma once

// UTF-8 <-> UTF-32 conversion and NFC normalization backed by ICU.
// Words are handled as std::u32string internally so that segment offsets
// count codepoints.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <unicode/normalizer2.h>
#include <unicode/unistr.h>
#include <unicode/ustring.h>
#include <unicode/utypes.h>

#include "lmseg/error.hpp"

namespace lmseg {

namespace detail {

inline icu::UnicodeString icu_from_utf8(std::string_view utf8) {
  UErrorCode status = U_ZERO_ERROR;
  int32_t needed = 0;
  u_strFromUTF8(nullptr, 0, &needed, utf8.data(),
                static_cast<int32_t>(utf8.size()), &status);
  if (status != U_BUFFER_OVERFLOW_ERROR && U_FAILURE(status)) {
    throw ParseError("invalid UTF-8 input");
  }
  status = U_ZERO_ERROR;
  icu::UnicodeString out;
  UChar* buf = out.getBuffer(needed + 1);
  u_strFromUTF8(buf, needed + 1, &needed, utf8.data(),
                static_cast<int32_t>(utf8.size()), &status);
  out.releaseBuffer(U_SUCCESS(status) ? needed : 0);
  if (U_FAILURE(status)) throw ParseError("invalid UTF-8 input");
  return out;
}

inline std::u32string icu_to_u32(const icu::UnicodeString& s) {
  std::u32string out(static_cast<size_t>(s.countChar32()), U'\0');
  UErrorCode status = U_ZERO_ERROR;
  s.toUTF32(reinterpret_cast<UChar32*>(out.data()),
            static_cast<int32_t>(out.size()), status);
  if (U_FAILURE(status)) throw ParseError("UTF-32 conversion failed");
  return out;
}

}  // namespace detail

/// Decodes UTF-8; throws ParseError on ill-formed input.
inline std::u32string to_u32(std::string_view utf8) {
  return detail::icu_to_u32(detail::icu_from_utf8(utf8));
}

inline std::string to_utf8(std::u32string_view text) {
  icu::UnicodeString s = icu::UnicodeString::fromUTF32(
      reinterpret_cast<const UChar32*>(text.data()),
      static_cast<int32_t>(text.size()));
  std::string out;
  s.toUTF8String(out);
  return out;
}

/// Text normalization applied to every corpus, gazetteer and dictionary
/// entry. NFC always; case folding only on request.
struct Normalization {
  bool casefold = false;

  std::u32string apply(std::string_view utf8) const {
    icu::UnicodeString s = detail::icu_from_utf8(utf8);
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status)) throw Error("ICU NFC normalizer unavailable");
    icu::UnicodeString normalized = nfc->normalize(s, status);
    if (U_FAILURE(status)) throw ParseError("normalization failed");
    if (casefold) {
      normalized.foldCase();
      normalized = nfc->normalize(normalized, status);
    }
    return detail::icu_to_u32(normalized);
  }
};

/// Splits on a single delimiter character, keeping empty fields.
inline std::vector<std::string_view> split(std::string_view text, char delim) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    size_t pos = text.find(delim, start);
    if (pos == std::string_view::npos) {
      out.push_back(text.substr(start));
      return out;
    }
    out.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::string_view trim(std::string_view s) {
  const char* ws = " \t\r\n";
  size_t b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  size_t e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

/// 64-bit FNV-1a, used to fingerprint resource files.
inline uint64_t fnv1a(std::string_view bytes,
                      uint64_t hash = 14695981039346656037ull) {
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  return hash;
}

}  // namespace lmseg
