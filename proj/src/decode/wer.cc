#include "ctxrnnt/decode/wer.h"

namespace ctxrnnt {

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::size_t i = 0;
  auto space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; };
  while (i < text.size()) {
    while (i < text.size() && space(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && !space(text[i])) ++i;
    if (i > start) words.emplace_back(text.substr(start, i - start));
  }
  return words;
}

EditCounts word_errors(std::string_view reference, std::string_view hypothesis) {
  const std::vector<std::string> ref = split_words(reference);
  const std::vector<std::string> hyp = split_words(hypothesis);
  return align<std::string>(ref, hyp);
}

}  // namespace ctxrnnt
