#include "dftrig/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <set>

namespace dftrig {

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  id_of_.reserve(tokens_.size());
  for (int i = 0; i < static_cast<int>(tokens_.size()); ++i) {
    const std::string& t = tokens_[static_cast<std::size_t>(i)];
    if (!id_of_.emplace(t, i).second) {
      throw InvalidSpecError("duplicate token in vocabulary: " + t);
    }
    if (t == kPadToken) pad_id_ = i;
    if (t == kSepToken) sep_id_ = i;
    if (t == kInitToken) init_id_ = i;
  }
  if (pad_id_ < 0 || sep_id_ < 0 || init_id_ < 0) {
    throw InvalidSpecError("vocabulary is missing a special token");
  }
}

int Vocabulary::id(const std::string& token) const {
  auto it = id_of_.find(token);
  if (it == id_of_.end()) throw UnknownTokenError("unknown token: " + token);
  return it->second;
}

bool Vocabulary::contains(const std::string& token) const {
  return id_of_.count(token) != 0;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || id >= size()) throw IndexError("token id out of range");
  return tokens_[static_cast<std::size_t>(id)];
}

Vocabulary make_vocabulary(const std::vector<std::vector<std::string>>& word_lists) {
  std::set<std::string> seen;
  for (const auto& list : word_lists) {
    for (const auto& w : list) {
      if (w.empty() || w.find_first_of(" \t\n") != std::string::npos) {
        throw InvalidSpecError("token contains whitespace or is empty: '" + w + "'");
      }
      if (w == kPadToken || w == kSepToken || w == kInitToken) {
        throw InvalidSpecError("token collides with a special: " + w);
      }
      if (!seen.insert(w).second) {
        throw InvalidSpecError("duplicate token across word lists: " + w);
      }
    }
  }
  std::vector<std::string> tokens = {kPadToken, kSepToken, kInitToken};
  tokens.insert(tokens.end(), seen.begin(), seen.end());  // set is sorted
  return Vocabulary(std::move(tokens));
}

std::vector<int> tokenize(const Vocabulary& vocab,
                          const std::vector<std::string>& words) {
  std::vector<int> ids;
  ids.reserve(words.size());
  for (const auto& w : words) ids.push_back(vocab.id(w));
  return ids;
}

std::vector<std::string> detokenize(const Vocabulary& vocab,
                                    const std::vector<int>& ids) {
  std::vector<std::string> words;
  words.reserve(ids.size());
  for (int id : ids) words.push_back(vocab.token(id));
  return words;
}

int CandidateMask::count_eligible() const {
  return static_cast<int>(std::count(eligible.begin(), eligible.end(), char(1)));
}

CandidateMask make_candidate_mask(const Vocabulary& vocab,
                                  const std::vector<std::string>& excluded) {
  CandidateMask mask;
  mask.eligible.assign(static_cast<std::size_t>(vocab.size()), char(1));
  for (int i = 0; i < vocab.size(); ++i) {
    if (vocab.is_special(i)) mask.eligible[static_cast<std::size_t>(i)] = 0;
  }
  for (const auto& w : excluded) {
    mask.eligible[static_cast<std::size_t>(vocab.id(w))] = 0;
  }
  return mask;
}

void save_vocabulary(const Vocabulary& vocab, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  for (const auto& t : vocab.tokens()) out << t << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

Vocabulary load_vocabulary(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open vocabulary file: " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) tokens.push_back(line);
  if (tokens.size() < 3 || tokens[0] != kPadToken || tokens[1] != kSepToken ||
      tokens[2] != kInitToken) {
    throw InvalidSpecError("vocabulary file does not start with the specials: " +
                           path.string());
  }
  return Vocabulary(std::move(tokens));
}

void save_token_list(const std::vector<std::string>& tokens,
                     const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  for (const auto& t : tokens) out << t << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<std::string> load_token_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open token list: " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) tokens.push_back(line);
  }
  return tokens;
}

}  // namespace dftrig
