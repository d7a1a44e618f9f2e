#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace textface {

/// Whitespace tokenizer over a fixed syllable vocabulary. Words outside the
/// vocabulary map to an FNV-1a hash bucket, so every caption tokenizes.
/// Real tokenizers come bundled with external text providers.
class ToyTokenizer {
 public:
  static constexpr int64_t kVocabSize = 32;

  std::vector<int64_t> encode(std::string_view text) const;
  std::string decode(const std::vector<int64_t>& ids) const;
  static std::string_view word(int64_t id);
};

}  // namespace textface
