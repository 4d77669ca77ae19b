#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dftrig/common.hpp"
#include "dftrig/vocab.hpp"

namespace dftrig {

// Synthetic planted-lexicon corpus. Every example carries class-indicative
// planted tokens; the remaining fill is drawn from the neutral pool, with an
// optional per-class bias toward a small artifact slice of that pool. The
// artifact tokens are the corpus's dataset artifacts: class-skewed words that
// belong to no lexicon and therefore stay eligible as trigger candidates.
struct CorpusSpec {
  int num_classes = 2;
  std::vector<std::vector<std::string>> planted_lexicon;  // per class
  std::vector<std::string> neutral_tokens;
  std::vector<std::vector<std::string>> artifact_tokens;  // per class, subset of neutral
  std::vector<double> artifact_rate;                      // per class, in [0,1)
  int min_length = 4;
  int max_length = 5;
  double planted_rate = 0.25;
  bool pair_mode = false;
  int train_size = 2000;
  int validation_size = 200;
  int test_size = 200;
  std::uint64_t seed = 0;
};

// Throws InvalidSpecError when an invariant fails.
void validate(const CorpusSpec& spec);

struct Corpus {
  std::vector<LabeledExample> train;
  std::vector<LabeledExample> validation;
  std::vector<LabeledExample> test;
};

Vocabulary build_vocabulary(const CorpusSpec& spec);
Corpus generate_corpus(const CorpusSpec& spec, const Vocabulary& vocab);

// Line-delimited records: label<TAB>seg0-tokens<TAB>seg1-tokens.
// Pair-mode sequences carry their SEP implicitly at the tab boundary.
void save_examples(const std::vector<LabeledExample>& examples,
                   const Vocabulary& vocab, const std::filesystem::path& path);
std::vector<LabeledExample> load_examples(const Vocabulary& vocab,
                                          const std::filesystem::path& path);

}  // namespace dftrig
