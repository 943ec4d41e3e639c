// ctxrnnt/decode/wer.h
//
// Unit-cost Levenshtein alignment. Counts come from one optimal alignment,
// traced back from the end preferring substitution (or match), then
// insertion, then deletion.

#ifndef CTXRNNT_DECODE_WER_H_
#define CTXRNNT_DECODE_WER_H_

#include <algorithm>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ctxrnnt/error.h"

namespace ctxrnnt {

struct EditCounts {
  std::size_t ref_words = 0;
  std::size_t substitutions = 0;
  std::size_t insertions = 0;
  std::size_t deletions = 0;

  std::size_t errors() const { return substitutions + insertions + deletions; }
  double wer() const { return static_cast<double>(errors()) / static_cast<double>(ref_words); }
};

template <class T>
std::size_t edit_distance(std::span<const T> a, std::span<const T> b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1), prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

// Throws ValidationError for an empty reference.
template <class T>
EditCounts align(std::span<const T> ref, std::span<const T> hyp) {
  if (ref.empty()) throw ValidationError("WER is undefined for an empty reference");
  const std::size_t n = ref.size(), m = hyp.size();
  std::vector<std::size_t> d((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return d[i * (m + 1) + j]; };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = i;
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = j;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      at(i, j) = std::min({at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1), at(i, j - 1) + 1,
                           at(i - 1, j) + 1});
    }
  }
  EditCounts c;
  c.ref_words = n;
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      const std::size_t diag = at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      if (at(i, j) == diag) {
        if (ref[i - 1] != hyp[j - 1]) ++c.substitutions;
        --i;
        --j;
        continue;
      }
    }
    if (j > 0 && at(i, j) == at(i, j - 1) + 1) {
      ++c.insertions;
      --j;
    } else {
      ++c.deletions;
      --i;
    }
  }
  return c;
}

std::vector<std::string> split_words(std::string_view text);

// Word-level counts on whitespace-tokenized text.
EditCounts word_errors(std::string_view reference, std::string_view hypothesis);

}  // namespace ctxrnnt

#endif  // CTXRNNT_DECODE_WER_H_
