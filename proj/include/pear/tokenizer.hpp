#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

namespace pear {

class EvalDataset;

namespace special {
inline constexpr int kPad = 0;
inline constexpr int kBos = 1;
inline constexpr int kSep = 2;
inline constexpr int kEos = 3;
inline constexpr int kUnk = 4;
inline constexpr int kCount = 5;
}  // namespace special

// Word-level vocabulary. Ids 0..4 are PAD/BOS/SEP/EOS/UNK, followed by the
// listed words, followed by `hash_buckets` ids that absorb unknown words.
// With no buckets, unknown words map to UNK.
class Vocabulary {
 public:
  Vocabulary();
  Vocabulary(std::vector<std::string> words, std::size_t hash_buckets);

  // All whitespace tokens of the dataset (lowercased), sorted.
  static Vocabulary from_dataset(const EvalDataset& dataset,
                                 std::size_t hash_buckets = 0);

  // Newline-delimited, line index = id. Bucket count is not stored in the
  // file; pass it on load.
  static Vocabulary load(const std::filesystem::path& path,
                         std::size_t hash_buckets = 0);
  void save(const std::filesystem::path& path) const;

  std::size_t size() const { return tokens_.size() + hash_buckets_; }
  std::size_t hash_buckets() const { return hash_buckets_; }
  const std::vector<std::string>& tokens() const { return tokens_; }

  int lookup(const std::string& word) const;
  std::vector<int> tokenize(const std::string& text) const;

  bool operator==(const Vocabulary& o) const {
    return tokens_ == o.tokens_ && hash_buckets_ == o.hash_buckets_;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
  std::size_t hash_buckets_ = 0;
};

struct SpanMasks {
  std::vector<std::uint8_t> src;
  std::vector<std::uint8_t> a;
  // Empty for single-candidate inputs.
  std::vector<std::uint8_t> b;
};

struct SerializedInput {
  std::vector<int> ids;
  std::vector<std::size_t> special_positions;
  SpanMasks masks;

  std::size_t length() const { return ids.size(); }
};

// BOS src SEP mt_a SEP mt_b EOS. When the sequence exceeds max_length the
// candidates are capped to a common length first, then the source is
// trimmed. Throws DataError if the source ends up with no tokens.
SerializedInput serialize_pair(const Vocabulary& vocab, std::size_t max_length,
                               const std::string& source,
                               const std::string& mt_a,
                               const std::string& mt_b);

// BOS src SEP mt EOS, same truncation rule.
SerializedInput serialize_single(const Vocabulary& vocab,
                                 std::size_t max_length,
                                 const std::string& source,
                                 const std::string& mt);

}  // namespace pear
