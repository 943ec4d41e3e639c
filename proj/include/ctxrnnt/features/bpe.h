// ctxrnnt/features/bpe.h
//
// Byte pair encoding over single-byte symbols. Text is split into chunks at
// each space (the space stays at the front of the chunk that follows it);
// merges never cross chunk boundaries, so decode(encode(s)) == s.
//
// Token ids: 0 is the blank, 1..A are the alphabet symbols in byte order,
// then one id per distinct merged token in merge order.

#ifndef CTXRNNT_FEATURES_BPE_H_
#define CTXRNNT_FEATURES_BPE_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace ctxrnnt {

enum class UnknownPolicy { kError, kSkip };

class BpeVocab {
 public:
  static constexpr int kBlankId = 0;

  BpeVocab() = default;
  BpeVocab(std::vector<char> alphabet,
           std::vector<std::pair<std::string, std::string>> merges,
           UnknownPolicy policy = UnknownPolicy::kError);

  // Includes the blank.
  std::size_t size() const { return tokens_.size(); }
  int blank_id() const { return kBlankId; }
  const std::string& token(int id) const;
  std::optional<int> id(const std::string& token) const;

  const std::vector<char>& alphabet() const { return alphabet_; }
  const std::vector<std::pair<std::string, std::string>>& merges() const { return merges_; }
  UnknownPolicy unknown_policy() const { return policy_; }

  std::vector<int> encode(std::string_view text) const;
  std::string decode(std::span<const int> ids) const;

  std::string serialize() const;
  static BpeVocab Parse(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static BpeVocab Load(const std::filesystem::path& path);

  // FNV-1a over the serialized form; recorded in model checkpoints.
  std::uint64_t hash() const;

 private:
  void encode_chunk(std::string_view chunk, std::vector<int>& out) const;

  std::vector<char> alphabet_;
  std::vector<std::pair<std::string, std::string>> merges_;
  UnknownPolicy policy_ = UnknownPolicy::kError;
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> token_ids_;
  std::unordered_map<std::string, std::size_t> merge_rank_;  // key: left \x1f right
  int symbol_id_[256] = {};
};

// Greedy BPE: repeatedly merge the most frequent adjacent pair (ties broken
// by the lexicographically smallest (left, right)), until the number of
// non-blank tokens reaches `target_size` or no pair occurs at least twice.
// Throws ValidationError for an empty corpus or a target below the alphabet.
BpeVocab bpe_train(const std::vector<std::string>& corpus,
                   std::size_t target_size);

// The chunks bpe_train and encode operate on.
std::vector<std::string_view> split_chunks(std::string_view text);

}  // namespace ctxrnnt

#endif  // CTXRNNT_FEATURES_BPE_H_
