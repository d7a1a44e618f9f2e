#include <textface/tokenizer.hpp>

#include <textface/error.hpp>

#include <array>
#include <sstream>

namespace textface {

namespace {

constexpr std::array<std::string_view, ToyTokenizer::kVocabSize> kWords = {
    "ba", "be", "bi", "bo", "ma", "me", "mi", "mo", "pa", "pe", "pi", "po", "ta", "te", "ti", "to",
    "ka", "ke", "ki", "ko", "sa", "se", "si", "so", "la", "le", "li", "lo", "na", "ne", "ni", "no"};

int64_t fnv1a_bucket(std::string_view word) {
  uint64_t hash = 14695981039346656037ull;
  for (unsigned char c : word) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  return static_cast<int64_t>(hash % ToyTokenizer::kVocabSize);
}

}  // namespace

std::vector<int64_t> ToyTokenizer::encode(std::string_view text) const {
  std::vector<int64_t> ids;
  std::istringstream stream{std::string(text)};
  std::string token;
  while (stream >> token) {
    int64_t id = -1;
    for (size_t i = 0; i < kWords.size(); ++i) {
      if (kWords[i] == token) {
        id = static_cast<int64_t>(i);
        break;
      }
    }
    ids.push_back(id >= 0 ? id : fnv1a_bucket(token));
  }
  return ids;
}

std::string ToyTokenizer::decode(const std::vector<int64_t>& ids) const {
  std::string out;
  for (size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ' ';
    out += word(ids[i]);
  }
  return out;
}

std::string_view ToyTokenizer::word(int64_t id) {
  require(id >= 0 && id < kVocabSize, "token id outside the toy vocabulary");
  return kWords[static_cast<size_t>(id)];
}

}  // namespace textface
