#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dftrig/impressions.hpp"
#include "dftrig/model.hpp"
#include "dftrig/triggers.hpp"
#include "dftrig/vocab.hpp"

namespace dftrig {

struct AttackReport {
  int source_class = 0;
  int target_class = 0;
  std::vector<int> trigger;
  double accuracy_before = 0.0;  // per-source-class accuracy
  double accuracy_after = 0.0;   // same example set, trigger applied
  std::vector<long> predicted_before;  // per predicted class, source subset
  std::vector<long> predicted_after;
  int n_examples = 0;

  double drop() const { return accuracy_before - accuracy_after; }
};

// Before/after per-class accuracy on the held-out examples of source_class.
AttackReport evaluate_attack(const TextClassifier& classifier,
                             std::span<const LabeledExample> examples,
                             const std::vector<int>& trigger, int source_class,
                             int target_class, int prepend_segment);

// Same evaluation against an independently trained victim. The trigger and
// corpus must use the victim's vocabulary.
AttackReport transfer_evaluate(const TextClassifier& victim,
                               std::span<const LabeledExample> examples,
                               const std::vector<int>& trigger, int source_class,
                               int target_class, int prepend_segment);

// Single-word attacks built from impression words: the first attacked-segment
// word of each source-class impression, minus skip_tokens, ranked by the mean
// loss it inflicts on the attacked class's own impressions, top-k evaluated
// against real examples of attacked_class.
std::vector<AttackReport> impression_word_attack(
    const TextClassifier& classifier,
    const std::vector<ClassImpression>& source_impressions,
    const std::vector<ClassImpression>& attacked_impressions,
    std::span<const LabeledExample> examples, int attacked_class,
    const std::vector<int>& skip_tokens, int top_k, int prepend_segment);

std::string format_reports_text(const std::vector<AttackReport>& reports,
                                const Vocabulary& vocab);
void write_reports_csv(const std::vector<AttackReport>& reports,
                       const Vocabulary& vocab, const std::filesystem::path& path);

}  // namespace dftrig
