#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "dftrig/model.hpp"
#include "dftrig/vocab.hpp"

namespace dftrig {

// Frozen example-level presence counts: a word counts once per example that
// contains it, PAD/SEP excluded.
class CorpusIndex {
 public:
  CorpusIndex(std::span<const LabeledExample> examples, int vocab_size,
              int num_classes);

  int vocab_size() const { return vocab_size_; }
  int num_classes() const { return num_classes_; }
  long count(int word, int cls) const;
  long word_total(int word) const;
  long class_total(int cls) const;
  long presence_total() const { return presence_total_; }

 private:
  int vocab_size_ = 0;
  int num_classes_ = 0;
  std::vector<long> counts_;       // word-major
  std::vector<long> class_totals_;
  long presence_total_ = 0;
};

struct WordStats {
  int word = -1;
  std::vector<long> class_counts;
  std::vector<double> p_class_given_word;  // add-1 smoothed
  double entropy_bits = 0.0;               // H(Y|X)
  std::vector<double> pmi;                 // add-10 smoothed, natural log
  std::vector<double> pmi_percentile;      // mean-rank ties, in [0,100]
};

// H(Y|X=word) in bits from add-1 smoothed example-level counts.
double conditional_entropy(const CorpusIndex& index, int word);

// PMI(word, class) = ln p(word,class) / (p(word,.) p(.,class)) with add-10
// smoothing applied to the joint counts before normalization.
double pmi(const CorpusIndex& index, int word, int cls);
double pmi(const CorpusIndex& index, int word, int cls, double smoothing);

// Percentile of pmi(word, cls) among all vocabulary words for that class:
// 100 * (#strictly-below + 0.5 * #ties) / |V|.
double pmi_percentile(const CorpusIndex& index, int word, int cls);

WordStats word_stats(const CorpusIndex& index, int word);

// CSV export of embedding vectors for external 2-D projection:
// header, then word,label,v0,...,v{d-1} with full-precision floats.
void export_word_vectors(const TextClassifier& classifier, const Vocabulary& vocab,
                         const std::vector<std::pair<int, int>>& word_labels,
                         const std::filesystem::path& path);

}  // namespace dftrig
