#include "dftrig/analysis.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

namespace dftrig {

CorpusIndex::CorpusIndex(std::span<const LabeledExample> examples, int vocab_size,
                         int num_classes)
    : vocab_size_(vocab_size), num_classes_(num_classes) {
  if (vocab_size < 1 || num_classes < 2) throw InvalidConfigError("bad index shape");
  counts_.assign(static_cast<std::size_t>(vocab_size) *
                     static_cast<std::size_t>(num_classes),
                 0L);
  class_totals_.assign(static_cast<std::size_t>(num_classes), 0L);
  for (const auto& ex : examples) {
    if (ex.label < 0 || ex.label >= num_classes) {
      throw InvalidConfigError("label out of range in corpus index");
    }
    std::set<int> present;
    for (int id : ex.seq.ids) {
      if (id == 0 || id == 1) continue;  // PAD/SEP carry no content
      if (id < 0 || id >= vocab_size) throw IndexError("token id out of range");
      present.insert(id);
    }
    for (int id : present) {
      ++counts_[static_cast<std::size_t>(id) *
                    static_cast<std::size_t>(num_classes_) +
                static_cast<std::size_t>(ex.label)];
      ++class_totals_[static_cast<std::size_t>(ex.label)];
      ++presence_total_;
    }
  }
}

long CorpusIndex::count(int word, int cls) const {
  if (word < 0 || word >= vocab_size_ || cls < 0 || cls >= num_classes_) {
    throw IndexError("index query out of range");
  }
  return counts_[static_cast<std::size_t>(word) *
                     static_cast<std::size_t>(num_classes_) +
                 static_cast<std::size_t>(cls)];
}

long CorpusIndex::word_total(int word) const {
  long total = 0;
  for (int k = 0; k < num_classes_; ++k) total += count(word, k);
  return total;
}

long CorpusIndex::class_total(int cls) const {
  if (cls < 0 || cls >= num_classes_) throw IndexError("class out of range");
  return class_totals_[static_cast<std::size_t>(cls)];
}

double conditional_entropy(const CorpusIndex& index, int word) {
  const int num_classes = index.num_classes();
  const double denom = static_cast<double>(index.word_total(word) + num_classes);
  double entropy = 0.0;
  for (int k = 0; k < num_classes; ++k) {
    const double p = static_cast<double>(index.count(word, k) + 1) / denom;
    entropy -= p * std::log2(p);
  }
  return entropy;
}

double pmi(const CorpusIndex& index, int word, int cls, double smoothing) {
  const double vocab = index.vocab_size();
  const double classes = index.num_classes();
  const double total =
      static_cast<double>(index.presence_total()) + smoothing * vocab * classes;
  const double joint = (static_cast<double>(index.count(word, cls)) + smoothing) / total;
  const double p_word =
      (static_cast<double>(index.word_total(word)) + smoothing * classes) / total;
  const double p_class =
      (static_cast<double>(index.class_total(cls)) + smoothing * vocab) / total;
  return std::log(joint / (p_word * p_class));
}

double pmi(const CorpusIndex& index, int word, int cls) {
  return pmi(index, word, cls, 10.0);  // add-10 smoothing
}

double pmi_percentile(const CorpusIndex& index, int word, int cls) {
  const double reference = pmi(index, word, cls);
  long below = 0;
  long ties = 0;
  for (int w = 0; w < index.vocab_size(); ++w) {
    const double v = pmi(index, w, cls);
    if (v < reference) {
      ++below;
    } else if (v == reference) {
      ++ties;
    }
  }
  return 100.0 * (static_cast<double>(below) + 0.5 * static_cast<double>(ties)) /
         static_cast<double>(index.vocab_size());
}

WordStats word_stats(const CorpusIndex& index, int word) {
  WordStats stats;
  stats.word = word;
  const int num_classes = index.num_classes();
  const double denom = static_cast<double>(index.word_total(word) + num_classes);
  for (int k = 0; k < num_classes; ++k) {
    stats.class_counts.push_back(index.count(word, k));
    stats.p_class_given_word.push_back(
        static_cast<double>(index.count(word, k) + 1) / denom);
    stats.pmi.push_back(pmi(index, word, k));
    stats.pmi_percentile.push_back(pmi_percentile(index, word, k));
  }
  stats.entropy_bits = conditional_entropy(index, word);
  return stats;
}

void export_word_vectors(const TextClassifier& classifier, const Vocabulary& vocab,
                         const std::vector<std::pair<int, int>>& word_labels,
                         const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  const int d = classifier.config().embed_dim;
  out << "word,label";
  for (int j = 0; j < d; ++j) out << ",v" << j;
  out << '\n';
  char buf[64];
  for (const auto& [word, label] : word_labels) {
    out << vocab.token(word) << ',' << label;
    for (int j = 0; j < d; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", classifier.embeddings()(word, j));
      out << ',' << buf;
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace dftrig
