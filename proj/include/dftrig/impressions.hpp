#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dftrig/flipcore.hpp"
#include "dftrig/model.hpp"
#include "dftrig/vocab.hpp"

namespace dftrig {

// Which positions CIG may edit in pair mode. SegmentOneOnly is the
// hypothesis-only variant: the premise stays at its INIT initialization.
enum class PairTarget { kBothSegments, kSegmentOneOnly };

struct ImpressionConfig {
  int target_class = 0;
  std::vector<int> lengths = {4, 6, 8, 10};  // per segment in pair mode
  std::vector<std::string> init_tokens = {kInitToken};
  int seeds_per_combo = 1;
  BeamConfig beam;  // beam.rng_seed is the base seed for the set
  PairTarget pair_target = PairTarget::kBothSegments;
};

struct ClassImpression {
  int target_class = 0;
  TokenSeq seq;
  double final_loss = 0.0;
  double confidence = 0.0;
  // provenance
  std::string init_token;
  int length = 0;
  std::uint64_t seed = 0;
};

// One CIG run for a single (length, init, seed) choice, taken from the first
// entries of the config lists. Needs only the checkpoint, vocabulary and
// candidate mask: no corpus anywhere.
ClassImpression generate_class_impression(const TextClassifier& classifier,
                                          const Vocabulary& vocab,
                                          const CandidateMask& mask,
                                          const ImpressionConfig& config);

// One impression per (length, init, seed) combination, in deterministic order.
std::vector<ClassImpression> generate_impression_set(
    const TextClassifier& classifier, const Vocabulary& vocab,
    const CandidateMask& mask, const ImpressionConfig& config);

// class<TAB>confidence<TAB>seg0-tokens<TAB>seg1-tokens<TAB>provenance-json
void save_impressions(const std::vector<ClassImpression>& impressions,
                      const Vocabulary& vocab, const std::filesystem::path& path);
std::vector<ClassImpression> load_impressions(const Vocabulary& vocab,
                                              const std::filesystem::path& path);

}  // namespace dftrig
