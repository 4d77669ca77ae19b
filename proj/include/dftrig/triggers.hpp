#pragma once

#include <filesystem>
#include <vector>

#include "dftrig/flipcore.hpp"
#include "dftrig/model.hpp"
#include "dftrig/vocab.hpp"

namespace dftrig {

struct TriggerConfig {
  int source_class = 0;
  int target_class = 1;  // must differ from source_class
  int trigger_length = 3;
  int prepend_segment = 0;  // 1 prepends to the hypothesis in pair mode
  BeamConfig beam;
};

struct TriggerCandidate {
  std::vector<int> tokens;
  double batch_loss = 0.0;  // mean task loss toward the target class
  double flip_rate = 0.0;   // fraction of the batch predicted as target
};

// Inserts the trigger at the start of the given segment. Other segments are
// untouched; an empty trigger returns the sequence unchanged.
TokenSeq apply_trigger(const TokenSeq& seq, const std::vector<int>& trigger,
                       int prepend_segment);

// UTG: optimize an INIT^length prefix against the mean batch loss toward the
// target class; per-position gradients are batch means (one gradient, |V| dot
// products per position). Returns the surviving beam candidates, ascending by
// batch loss.
std::vector<TriggerCandidate> mine_trigger(const TextClassifier& classifier,
                                           const Vocabulary& vocab,
                                           const std::vector<TokenSeq>& batch,
                                           const TriggerConfig& config,
                                           const CandidateMask& mask);

struct TriggerReport {
  TriggerConfig config;
  int batch_size = 0;
  std::vector<TriggerCandidate> candidates;
};

void save_trigger_report(const TriggerReport& report, const Vocabulary& vocab,
                         const std::filesystem::path& path);
TriggerReport load_trigger_report(const Vocabulary& vocab,
                                  const std::filesystem::path& path);

}  // namespace dftrig
