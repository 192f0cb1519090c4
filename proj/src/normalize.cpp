#include "lofree/normalize.hpp"

#include <algorithm>
#include <array>
#include <cstdint>

namespace lofree {

namespace {

bool is_space_byte(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

struct Range {
  char32_t lo;
  char32_t hi;
};

// Sorted, non-overlapping codepoint ranges classified as punctuation.
// ASCII entries follow the Unicode general categories exactly; the rest
// covers the punctuation blocks seen in QA corpora.
constexpr std::array<Range, 39> kPunctRanges{{
    {0x0021, 0x0023},  // ! " #
    {0x0025, 0x002A},  // % & ' ( ) *
    {0x002C, 0x002F},  // , - . /
    {0x003A, 0x003B},  // : ;
    {0x003F, 0x0040},  // ? @
    {0x005B, 0x005D},  // [ \ ]
    {0x005F, 0x005F},  // _
    {0x007B, 0x007B},  // {
    {0x007D, 0x007D},  // }
    {0x00A1, 0x00A1},  // inverted exclamation
    {0x00A7, 0x00A7},  // section sign
    {0x00AB, 0x00AB},  // left guillemet
    {0x00B6, 0x00B7},  // pilcrow, middle dot
    {0x00BB, 0x00BB},  // right guillemet
    {0x00BF, 0x00BF},  // inverted question
    {0x037E, 0x037E},  // Greek question mark
    {0x0387, 0x0387},  // Greek ano teleia
    {0x0589, 0x058A},  // Armenian full stop, hyphen
    {0x05BE, 0x05BE},  // Hebrew maqaf
    {0x05C0, 0x05C0},  // Hebrew paseq
    {0x05C3, 0x05C3},  // Hebrew sof pasuq
    {0x05F3, 0x05F4},  // Hebrew geresh, gershayim
    {0x060C, 0x060D},  // Arabic comma, date separator
    {0x061B, 0x061B},  // Arabic semicolon
    {0x061F, 0x061F},  // Arabic question mark
    {0x066A, 0x066D},  // Arabic percent .. five pointed star
    {0x06D4, 0x06D4},  // Arabic full stop
    {0x0964, 0x0965},  // Devanagari danda, double danda
    {0x1361, 0x1368},  // Ethiopic wordspace .. paragraph separator
    {0x2010, 0x2027},  // hyphens, dashes, quotes, daggers, bullet, ellipsis
    {0x2030, 0x2043},  // per mille .. hyphen bullet (2044 is Sm)
    {0x2045, 0x2051},  // brackets .. two asterisks
    {0x2053, 0x205E},  // swung dash .. vertical four dots (2052 is Sm)
    {0x2E00, 0x2E4F},  // Supplemental Punctuation
    {0x3001, 0x3003},  // ideographic comma, full stop, ditto
    {0x3008, 0x3011},  // CJK angle/corner/lenticular brackets
    {0x3014, 0x301F},  // CJK tortoise shell brackets .. quotation marks
    {0x3030, 0x3030},  // wavy dash
    {0x303D, 0x303D},  // part alternation mark
}};

// The fullwidth block FF01-FF65 mixes punctuation with symbols the same way
// ASCII does; reuse the ASCII classification for the mirrored codepoints.
bool fullwidth_punct(char32_t cp) {
  if (cp >= 0xFF01 && cp <= 0xFF5E) {
    return is_punctuation(cp - 0xFF01 + 0x21);
  }
  // FF5F..FF65: double parentheses, halfwidth brackets, comma, katakana
  // middle dot. All Ps/Pe/Po.
  return cp >= 0xFF5F && cp <= 0xFF65;
}

// Decodes one UTF-8 codepoint starting at `i`; advances `i` past it.
// Malformed bytes are returned verbatim as single-byte codepoints.
char32_t decode_utf8(std::string_view text, std::size_t& i) {
  const auto byte = [&](std::size_t k) {
    return static_cast<unsigned char>(text[k]);
  };
  unsigned char b0 = byte(i);
  std::size_t len = 1;
  char32_t cp = b0;
  if ((b0 & 0x80) == 0x00) {
    len = 1;
  } else if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    ++i;
    return b0;
  }
  if (i + len > text.size()) {
    ++i;
    return b0;
  }
  for (std::size_t k = 1; k < len; ++k) {
    unsigned char bk = byte(i + k);
    if ((bk & 0xC0) != 0x80) {
      ++i;
      return b0;
    }
    cp = (cp << 6) | (bk & 0x3F);
  }
  i += len;
  return cp;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

bool is_article(std::string_view token) {
  return token == "a" || token == "an" || token == "the";
}

}  // namespace

bool is_punctuation(char32_t cp) {
  if (cp >= 0xFF01) {
    return fullwidth_punct(cp);
  }
  auto it = std::upper_bound(
      kPunctRanges.begin(), kPunctRanges.end(), cp,
      [](char32_t value, const Range& r) { return value < r.lo; });
  if (it == kPunctRanges.begin()) return false;
  --it;
  return cp <= it->hi;
}

std::string extract_answer(std::string_view text) {
  std::size_t cut = text.size();
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c == '\n' || c == '\r' || c == ',' || c == '.') {
      cut = i;
      break;
    }
  }
  return std::string(text.substr(0, cut));
}

std::string normalize_answer(std::string_view text) {
  const std::string head = extract_answer(text);

  // Lowercase (ASCII) and strip punctuation in one decode pass.
  std::string stripped;
  stripped.reserve(head.size());
  std::size_t i = 0;
  while (i < head.size()) {
    char32_t cp = decode_utf8(head, i);
    if (is_punctuation(cp)) continue;
    if (cp < 0x80) {
      char c = static_cast<char>(cp);
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
      stripped.push_back(c);
    } else {
      append_utf8(stripped, cp);
    }
  }

  // Tokenize on whitespace, drop articles, rejoin with single spaces. Text
  // consisting solely of articles keeps its tokens (an MCQ answer "A" must
  // survive as "a"); the fallback re-applies identically on a second pass,
  // preserving idempotence.
  std::string kept;
  std::string all;
  kept.reserve(stripped.size());
  std::size_t pos = 0;
  while (pos < stripped.size()) {
    while (pos < stripped.size() &&
           is_space_byte(static_cast<unsigned char>(stripped[pos]))) {
      ++pos;
    }
    std::size_t start = pos;
    while (pos < stripped.size() &&
           !is_space_byte(static_cast<unsigned char>(stripped[pos]))) {
      ++pos;
    }
    if (start == pos) break;
    std::string_view token(&stripped[start], pos - start);
    if (!all.empty()) all.push_back(' ');
    all.append(token);
    if (is_article(token)) continue;
    if (!kept.empty()) kept.push_back(' ');
    kept.append(token);
  }
  return kept.empty() ? all : kept;
}

bool exact_match(std::string_view candidate,
                 const std::vector<std::string>& true_answers) {
  return std::any_of(
      true_answers.begin(), true_answers.end(),
      [candidate](const std::string& answer) { return candidate == answer; });
}

}  // namespace lofree
