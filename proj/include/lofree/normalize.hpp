#ifndef LOFREE_NORMALIZE_HPP
#define LOFREE_NORMALIZE_HPP

#include <string>
#include <string_view>
#include <vector>

namespace lofree {

// Answer extraction: keep the text up to (not including) the first line
// break, comma, or period. Idempotent.
std::string extract_answer(std::string_view text);

// Full answer normalization used everywhere a response or gold answer is
// compared, counted, or embedded:
//   1. extract_answer (truncate at first line break / comma / period)
//   2. ASCII lowercase
//   3. strip punctuation (Unicode P* categories; see is_punctuation)
//   4. drop the standalone English articles "a", "an", "the"
//   5. collapse whitespace runs to a single space and trim
// Articles are dropped after the punctuation strip so that a second pass
// can never uncover a new article token, and text consisting entirely of
// articles keeps its tokens (an MCQ answer "A" must normalize to "a", not
// vanish); both rules keep the function idempotent. May return the empty
// string.
std::string normalize_answer(std::string_view text);

// Punctuation classifier for normalize_answer. Covers the Unicode P*
// ranges that occur in QA text: full ASCII punctuation categories, Latin-1
// punctuation, General and Supplemental Punctuation, CJK symbols, and
// fullwidth forms. Math/currency symbols ($ + < = > ^ ` | ~) are not
// punctuation and are kept.
bool is_punctuation(char32_t codepoint);

// Byte-for-byte membership test; both sides must already be normalized.
bool exact_match(std::string_view candidate,
                 const std::vector<std::string>& true_answers);

}  // namespace lofree

#endif  // LOFREE_NORMALIZE_HPP
