#pragma once

#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "dftrig/common.hpp"

namespace dftrig {

inline constexpr const char* kPadToken = "<pad>";
inline constexpr const char* kSepToken = "<sep>";
inline constexpr const char* kInitToken = "<init>";

// Closed vocabulary: dense ids, specials first, remaining tokens sorted.
class Vocabulary {
 public:
  Vocabulary() = default;
  // tokens must already contain the three specials at the front.
  explicit Vocabulary(std::vector<std::string> tokens);

  int size() const { return static_cast<int>(tokens_.size()); }
  int id(const std::string& token) const;       // throws UnknownTokenError
  bool contains(const std::string& token) const;
  const std::string& token(int id) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

  int pad_id() const { return pad_id_; }
  int sep_id() const { return sep_id_; }
  int init_id() const { return init_id_; }
  bool is_special(int id) const {
    return id == pad_id_ || id == sep_id_ || id == init_id_;
  }

  bool operator==(const Vocabulary& o) const { return tokens_ == o.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> id_of_;
  int pad_id_ = -1, sep_id_ = -1, init_id_ = -1;
};

// Builds a vocabulary from word lists: specials, then the sorted union.
// Duplicates across lists are an InvalidSpecError.
Vocabulary make_vocabulary(const std::vector<std::vector<std::string>>& word_lists);

std::vector<int> tokenize(const Vocabulary& vocab,
                          const std::vector<std::string>& words);
std::vector<std::string> detokenize(const Vocabulary& vocab,
                                    const std::vector<int>& ids);

// Per-id eligibility for flip candidates. PAD/SEP/INIT are never eligible.
struct CandidateMask {
  std::vector<char> eligible;

  bool is_eligible(int id) const { return eligible[static_cast<std::size_t>(id)]; }
  int count_eligible() const;
};

CandidateMask make_candidate_mask(const Vocabulary& vocab,
                                  const std::vector<std::string>& excluded);

// One token per line, id = line number.
void save_vocabulary(const Vocabulary& vocab, const std::filesystem::path& path);
Vocabulary load_vocabulary(const std::filesystem::path& path);

// One token per line; used for construct-relevant exclusion lists.
void save_token_list(const std::vector<std::string>& tokens,
                     const std::filesystem::path& path);
std::vector<std::string> load_token_list(const std::filesystem::path& path);

}  // namespace dftrig
