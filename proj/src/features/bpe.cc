#include "ctxrnnt/features/bpe.h"

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "ctxrnnt/error.h"

namespace ctxrnnt {

namespace {

std::string merge_key(const std::string& a, const std::string& b) {
  std::string k = a;
  k.push_back('\x1f');
  k += b;
  return k;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case ' ': out += "\\s"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\\': out += "\\\\"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string unescape(const std::string& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '\\') {
      out.push_back(s[i]);
      continue;
    }
    if (++i == s.size()) throw ValidationError("dangling escape in vocab file");
    switch (s[i]) {
      case 's': out.push_back(' '); break;
      case 't': out.push_back('\t'); break;
      case 'n': out.push_back('\n'); break;
      case 'r': out.push_back('\r'); break;
      case '\\': out.push_back('\\'); break;
      default: throw ValidationError("unknown escape in vocab file");
    }
  }
  return out;
}

// Merges every non-overlapping occurrence of (left, right), left to right.
bool apply_merge(std::vector<std::string>& symbols, const std::string& left,
                 const std::string& right) {
  bool changed = false;
  std::vector<std::string> out;
  out.reserve(symbols.size());
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    if (i + 1 < symbols.size() && symbols[i] == left && symbols[i + 1] == right) {
      out.push_back(left + right);
      ++i;
      changed = true;
    } else {
      out.push_back(std::move(symbols[i]));
    }
  }
  symbols.swap(out);
  return changed;
}

}  // namespace

std::vector<std::string_view> split_chunks(std::string_view text) {
  std::vector<std::string_view> chunks;
  std::size_t start = 0;
  for (std::size_t i = 1; i < text.size(); ++i) {
    if (text[i] == ' ') {
      chunks.push_back(text.substr(start, i - start));
      start = i;
    }
  }
  if (!text.empty()) chunks.push_back(text.substr(start));
  return chunks;
}

BpeVocab::BpeVocab(std::vector<char> alphabet,
                   std::vector<std::pair<std::string, std::string>> merges,
                   UnknownPolicy policy)
    : alphabet_(std::move(alphabet)), merges_(std::move(merges)), policy_(policy) {
  std::sort(alphabet_.begin(), alphabet_.end(),
            [](char a, char b) { return static_cast<unsigned char>(a) < static_cast<unsigned char>(b); });
  if (std::adjacent_find(alphabet_.begin(), alphabet_.end()) != alphabet_.end()) {
    throw ValidationError("duplicate alphabet symbol");
  }
  tokens_.push_back("");  // blank
  for (char c : alphabet_) {
    const int id = static_cast<int>(tokens_.size());
    tokens_.emplace_back(1, c);
    token_ids_[tokens_.back()] = id;
    symbol_id_[static_cast<unsigned char>(c)] = id;
  }
  for (std::size_t r = 0; r < merges_.size(); ++r) {
    const auto& [a, b] = merges_[r];
    if (!token_ids_.count(a) || !token_ids_.count(b)) {
      throw ValidationError("merge '" + a + "' + '" + b + "' uses an unknown token");
    }
    merge_rank_.emplace(merge_key(a, b), r);
    const std::string joined = a + b;
    if (!token_ids_.count(joined)) {
      token_ids_[joined] = static_cast<int>(tokens_.size());
      tokens_.push_back(joined);
    }
  }
}

const std::string& BpeVocab::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw ValidationError("token id " + std::to_string(id) + " out of range");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

std::optional<int> BpeVocab::id(const std::string& token) const {
  auto it = token_ids_.find(token);
  if (it == token_ids_.end()) return std::nullopt;
  return it->second;
}

void BpeVocab::encode_chunk(std::string_view chunk, std::vector<int>& out) const {
  std::vector<std::string> symbols;
  symbols.reserve(chunk.size());
  for (char c : chunk) {
    if (symbol_id_[static_cast<unsigned char>(c)] == 0) {
      if (policy_ == UnknownPolicy::kSkip) continue;
      throw ValidationError(std::string("symbol '") + c + "' is outside the vocabulary alphabet");
    }
    symbols.emplace_back(1, c);
  }
  while (symbols.size() > 1) {
    std::size_t best = std::numeric_limits<std::size_t>::max();
    std::size_t best_pos = 0;
    for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
      auto it = merge_rank_.find(merge_key(symbols[i], symbols[i + 1]));
      if (it != merge_rank_.end() && it->second < best) {
        best = it->second;
        best_pos = i;
      }
    }
    if (best == std::numeric_limits<std::size_t>::max()) break;
    const std::string left = symbols[best_pos];
    const std::string right = symbols[best_pos + 1];
    apply_merge(symbols, left, right);
  }
  for (const auto& s : symbols) out.push_back(token_ids_.at(s));
}

std::vector<int> BpeVocab::encode(std::string_view text) const {
  std::vector<int> ids;
  for (std::string_view chunk : split_chunks(text)) encode_chunk(chunk, ids);
  return ids;
}

std::string BpeVocab::decode(std::span<const int> ids) const {
  std::string out;
  for (int id : ids) {
    if (id == kBlankId) continue;
    out += token(id);
  }
  return out;
}

std::string BpeVocab::serialize() const {
  std::ostringstream os;
  os << "#ctxrnnt-bpe version=1 blank=" << kBlankId << " alphabet=" << alphabet_.size()
     << " merges=" << merges_.size()
     << " unknown=" << (policy_ == UnknownPolicy::kError ? "error" : "skip") << "\n";
  for (char c : alphabet_) os << "sym " << escape(std::string(1, c)) << "\n";
  for (const auto& [a, b] : merges_) os << escape(a) << ' ' << escape(b) << "\n";
  return os.str();
}

BpeVocab BpeVocab::Parse(const std::string& text) {
  std::istringstream in(text);
  std::string header;
  if (!std::getline(in, header) || header.rfind("#ctxrnnt-bpe ", 0) != 0) {
    throw ValidationError("vocab file lacks the #ctxrnnt-bpe header");
  }
  std::map<std::string, std::string> fields;
  {
    std::istringstream hs(header.substr(13));
    std::string kv;
    while (hs >> kv) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ValidationError("bad vocab header field '" + kv + "'");
      fields[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
  }
  if (fields["version"] != "1") throw ValidationError("unsupported vocab version");
  if (fields["blank"] != "0") throw ValidationError("vocab blank id must be 0");
  const std::size_t n_alpha = std::stoul(fields.at("alphabet"));
  const std::size_t n_merges = std::stoul(fields.at("merges"));
  const UnknownPolicy policy =
      fields["unknown"] == "skip" ? UnknownPolicy::kSkip : UnknownPolicy::kError;

  std::vector<char> alphabet;
  std::vector<std::pair<std::string, std::string>> merges;
  std::string line;
  for (std::size_t i = 0; i < n_alpha; ++i) {
    if (!std::getline(in, line) || line.rfind("sym ", 0) != 0) {
      throw ValidationError("vocab file truncated in alphabet section");
    }
    const std::string sym = unescape(line.substr(4));
    if (sym.size() != 1) throw ValidationError("alphabet entries must be one byte");
    alphabet.push_back(sym[0]);
  }
  for (std::size_t i = 0; i < n_merges; ++i) {
    if (!std::getline(in, line)) throw ValidationError("vocab file truncated in merge section");
    const auto sp = line.find(' ');
    if (sp == std::string::npos) throw ValidationError("malformed merge line '" + line + "'");
    merges.emplace_back(unescape(line.substr(0, sp)), unescape(line.substr(sp + 1)));
  }
  return BpeVocab(std::move(alphabet), std::move(merges), policy);
}

void BpeVocab::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write vocab '" + path.string() + "'");
  out << serialize();
}

BpeVocab BpeVocab::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read vocab '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return Parse(ss.str());
}

std::uint64_t BpeVocab::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : serialize()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

BpeVocab bpe_train(const std::vector<std::string>& corpus, std::size_t target_size) {
  if (corpus.empty()) throw ValidationError("bpe_train: empty corpus");
  std::map<std::string, long> chunk_counts;
  std::set<char> alphabet_set;
  for (const auto& line : corpus) {
    for (std::string_view chunk : split_chunks(line)) {
      ++chunk_counts[std::string(chunk)];
      for (char c : chunk) alphabet_set.insert(c);
    }
  }
  if (alphabet_set.empty()) throw ValidationError("bpe_train: corpus has no symbols");
  if (target_size < alphabet_set.size()) {
    throw ValidationError("bpe_train: target size " + std::to_string(target_size) +
                          " is smaller than the base alphabet (" +
                          std::to_string(alphabet_set.size()) + ")");
  }

  std::vector<std::pair<std::vector<std::string>, long>> words;
  for (const auto& [chunk, count] : chunk_counts) {
    std::vector<std::string> symbols;
    for (char c : chunk) symbols.emplace_back(1, c);
    words.emplace_back(std::move(symbols), count);
  }

  std::set<std::string> tokens;
  for (char c : alphabet_set) tokens.insert(std::string(1, c));
  std::vector<std::pair<std::string, std::string>> merges;
  while (tokens.size() < target_size) {
    std::map<std::pair<std::string, std::string>, long> pair_counts;
    for (const auto& [symbols, count] : words) {
      for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
        pair_counts[{symbols[i], symbols[i + 1]}] += count;
      }
    }
    const std::pair<std::string, std::string>* best = nullptr;
    long best_count = 1;
    // Map order is lexicographic, so the first pair at the max count wins ties.
    for (const auto& [pair, count] : pair_counts) {
      if (count > best_count) {
        best = &pair;
        best_count = count;
      }
    }
    if (!best) break;
    const auto merge = *best;
    for (auto& [symbols, count] : words) apply_merge(symbols, merge.first, merge.second);
    tokens.insert(merge.first + merge.second);
    merges.push_back(merge);
  }
  return BpeVocab(std::vector<char>(alphabet_set.begin(), alphabet_set.end()), std::move(merges));
}

}  // namespace ctxrnnt
