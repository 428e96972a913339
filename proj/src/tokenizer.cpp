#include "pear/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "pear/corpus.hpp"
#include "pear/error.hpp"
#include "pear/parallel.hpp"

namespace pear {

namespace {

const char* const kSpecialNames[special::kCount] = {"<pad>", "<bos>", "<sep>",
                                                    "<eos>", "<unk>"};

std::string lowercase(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

Vocabulary::Vocabulary() : Vocabulary({}, 0) {}

Vocabulary::Vocabulary(std::vector<std::string> words, std::size_t hash_buckets)
    : hash_buckets_(hash_buckets) {
  tokens_.assign(std::begin(kSpecialNames), std::end(kSpecialNames));
  for (auto& w : words) tokens_.push_back(std::move(w));
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (i >= special::kCount && tokens_[i].empty())
      throw DataError(DataError::Code::kParse,
                      "vocabulary line " + std::to_string(i + 1) + " is empty");
    index_.emplace(tokens_[i], static_cast<int>(i));
  }
}

Vocabulary Vocabulary::from_dataset(const EvalDataset& dataset,
                                    std::size_t hash_buckets) {
  std::set<std::string> words;
  auto add = [&words](const std::string& text) {
    for (auto& w : split_whitespace(text)) words.insert(lowercase(w));
  };
  for (const auto& s : dataset.segments()) add(s.source_text);
  for (const auto& o : dataset.outputs()) add(o.translation);
  for (const auto& [seg, ref] : dataset.references()) add(ref);
  for (const char* name : kSpecialNames) words.erase(name);
  return Vocabulary({words.begin(), words.end()}, hash_buckets);
}

Vocabulary Vocabulary::load(const std::filesystem::path& path,
                            std::size_t hash_buckets) {
  std::ifstream in(path);
  if (!in)
    throw DataError(DataError::Code::kIo, "cannot open '" + path.string() + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  if (lines.size() < special::kCount)
    throw DataError(DataError::Code::kParse,
                    path.string() + ": fewer than 5 reserved entries");
  for (int i = 0; i < special::kCount; ++i) {
    if (lines[i] != kSpecialNames[i])
      throw DataError(DataError::Code::kParse,
                      path.string() + ":" + std::to_string(i + 1) +
                          ": expected reserved token " + kSpecialNames[i]);
  }
  return Vocabulary({lines.begin() + special::kCount, lines.end()},
                    hash_buckets);
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw DataError(DataError::Code::kIo, "cannot write '" + path.string() + "'");
  for (const auto& t : tokens_) out << t << '\n';
}

int Vocabulary::lookup(const std::string& word) const {
  const auto key = lowercase(word);
  auto it = index_.find(key);
  if (it != index_.end() && it->second >= special::kCount) return it->second;
  if (hash_buckets_ == 0) return special::kUnk;
  return static_cast<int>(tokens_.size() + fnv1a(key) % hash_buckets_);
}

std::vector<int> Vocabulary::tokenize(const std::string& text) const {
  std::vector<int> ids;
  for (const auto& w : split_whitespace(text)) ids.push_back(lookup(w));
  return ids;
}

namespace {

// Largest c with min(la, c) + min(lb, c) <= budget.
std::size_t common_cap(std::size_t la, std::size_t lb, std::size_t budget) {
  std::size_t cap = std::max(la, lb);
  while (cap > 0 && std::min(la, cap) + std::min(lb, cap) > budget) --cap;
  return cap;
}

void append_span(SerializedInput& out, const std::vector<int>& ids,
                 std::size_t count, std::vector<std::uint8_t>& mask) {
  for (std::size_t i = 0; i < count; ++i) {
    mask[out.ids.size()] = 1;
    out.ids.push_back(ids[i]);
  }
}

void append_special(SerializedInput& out, int id) {
  out.special_positions.push_back(out.ids.size());
  out.ids.push_back(id);
}

}  // namespace

SerializedInput serialize_pair(const Vocabulary& vocab, std::size_t max_length,
                               const std::string& source,
                               const std::string& mt_a,
                               const std::string& mt_b) {
  const auto src = vocab.tokenize(source);
  const auto a = vocab.tokenize(mt_a);
  const auto b = vocab.tokenize(mt_b);
  constexpr std::size_t kSpecials = 4;

  std::size_t ls = src.size(), la = a.size(), lb = b.size();
  if (kSpecials + ls + la + lb > max_length) {
    const std::size_t room = max_length > kSpecials ? max_length - kSpecials : 0;
    if (room > ls) {
      const std::size_t cap = common_cap(la, lb, room - ls);
      la = std::min(la, cap);
      lb = std::min(lb, cap);
    } else {
      la = lb = 0;
      ls = room;
    }
  }
  if (ls == 0)
    throw DataError(DataError::Code::kInvalidArgument,
                    "source has no tokens after serialization");

  SerializedInput out;
  const std::size_t total = kSpecials + ls + la + lb;
  out.ids.reserve(total);
  out.masks.src.assign(total, 0);
  out.masks.a.assign(total, 0);
  out.masks.b.assign(total, 0);
  append_special(out, special::kBos);
  append_span(out, src, ls, out.masks.src);
  append_special(out, special::kSep);
  append_span(out, a, la, out.masks.a);
  append_special(out, special::kSep);
  append_span(out, b, lb, out.masks.b);
  append_special(out, special::kEos);
  return out;
}

SerializedInput serialize_single(const Vocabulary& vocab,
                                 std::size_t max_length,
                                 const std::string& source,
                                 const std::string& mt) {
  const auto src = vocab.tokenize(source);
  const auto c = vocab.tokenize(mt);
  constexpr std::size_t kSpecials = 3;

  std::size_t ls = src.size(), lc = c.size();
  if (kSpecials + ls + lc > max_length) {
    const std::size_t room = max_length > kSpecials ? max_length - kSpecials : 0;
    if (room > ls) {
      lc = room - ls;
    } else {
      lc = 0;
      ls = room;
    }
  }
  if (ls == 0)
    throw DataError(DataError::Code::kInvalidArgument,
                    "source has no tokens after serialization");

  SerializedInput out;
  const std::size_t total = kSpecials + ls + lc;
  out.ids.reserve(total);
  out.masks.src.assign(total, 0);
  out.masks.a.assign(total, 0);
  append_special(out, special::kBos);
  append_span(out, src, ls, out.masks.src);
  append_special(out, special::kSep);
  append_span(out, c, lc, out.masks.a);
  append_special(out, special::kEos);
  return out;
}

}  // namespace pear
