#include "dftrig/evalharness.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace dftrig {

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

AttackReport evaluate_attack(const TextClassifier& classifier,
                             std::span<const LabeledExample> examples,
                             const std::vector<int>& trigger, int source_class,
                             int target_class, int prepend_segment) {
  const int num_classes = classifier.config().num_classes;
  if (source_class < 0 || source_class >= num_classes) {
    throw InvalidConfigError("source class out of range");
  }
  for (int id : trigger) {
    if (id < 0 || id >= classifier.config().vocab_size) {
      throw VocabMismatchError("trigger token id outside the model vocabulary");
    }
  }
  std::vector<const LabeledExample*> subset;
  for (const auto& ex : examples) {
    if (ex.label == source_class) subset.push_back(&ex);
  }
  if (subset.empty()) {
    throw EmptyClassError("no examples of class " + std::to_string(source_class));
  }

  AttackReport report;
  report.source_class = source_class;
  report.target_class = target_class;
  report.trigger = trigger;
  report.n_examples = static_cast<int>(subset.size());
  report.predicted_before.assign(static_cast<std::size_t>(num_classes), 0);
  report.predicted_after.assign(static_cast<std::size_t>(num_classes), 0);

  std::vector<int> before(subset.size());
  std::vector<int> after(subset.size());
  parallel_for(subset.size(), [&](std::size_t i) {
    before[i] = classifier.predict(subset[i]->seq);
    after[i] = classifier.predict(
        apply_trigger(subset[i]->seq, trigger, prepend_segment));
  });
  long hits_before = 0;
  long hits_after = 0;
  for (std::size_t i = 0; i < subset.size(); ++i) {
    ++report.predicted_before[static_cast<std::size_t>(before[i])];
    ++report.predicted_after[static_cast<std::size_t>(after[i])];
    hits_before += before[i] == source_class;
    hits_after += after[i] == source_class;
  }
  report.accuracy_before =
      static_cast<double>(hits_before) / static_cast<double>(subset.size());
  report.accuracy_after =
      static_cast<double>(hits_after) / static_cast<double>(subset.size());
  return report;
}

AttackReport transfer_evaluate(const TextClassifier& victim,
                               std::span<const LabeledExample> examples,
                               const std::vector<int>& trigger, int source_class,
                               int target_class, int prepend_segment) {
  for (const auto& ex : examples) {
    for (int id : ex.seq.ids) {
      if (id < 0 || id >= victim.config().vocab_size) {
        throw VocabMismatchError("corpus token id outside the victim vocabulary");
      }
    }
  }
  return evaluate_attack(victim, examples, trigger, source_class, target_class,
                         prepend_segment);
}

std::vector<AttackReport> impression_word_attack(
    const TextClassifier& classifier,
    const std::vector<ClassImpression>& source_impressions,
    const std::vector<ClassImpression>& attacked_impressions,
    std::span<const LabeledExample> examples, int attacked_class,
    const std::vector<int>& skip_tokens, int top_k, int prepend_segment) {
  if (top_k <= 0) return {};
  if (attacked_impressions.empty()) {
    throw InvalidConfigError("no attacked-class impressions to rank against");
  }
  const int word_class =
      source_impressions.empty() ? -1 : source_impressions.front().target_class;
  if (word_class == attacked_class) {
    throw InvalidConfigError("word class must differ from the attacked class");
  }

  // First word of each impression in the attacked segment, deduplicated,
  // construct-relevant words skipped.
  std::vector<int> words;
  for (const auto& imp : source_impressions) {
    for (std::size_t i = 0; i < imp.seq.size(); ++i) {
      if (imp.seq.segments[i] != prepend_segment) continue;
      const int id = imp.seq.ids[i];
      if (id == classifier.sep_id()) continue;
      if (std::find(skip_tokens.begin(), skip_tokens.end(), id) ==
              skip_tokens.end() &&
          std::find(words.begin(), words.end(), id) == words.end()) {
        words.push_back(id);
      }
      break;
    }
  }
  if (words.empty()) return {};

  // Rank by mean loss inflicted on the attacked class's own impressions.
  std::vector<double> damage(words.size());
  parallel_for(words.size(), [&](std::size_t i) {
    const std::vector<int> one{words[i]};
    double sum = 0.0;
    for (const auto& imp : attacked_impressions) {
      sum += classifier.task_loss(apply_trigger(imp.seq, one, prepend_segment),
                                  attacked_class);
    }
    damage[i] = sum / static_cast<double>(attacked_impressions.size());
  });
  std::vector<std::size_t> order(words.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (damage[a] != damage[b]) return damage[a] > damage[b];
    return words[a] < words[b];
  });

  std::vector<AttackReport> reports;
  for (std::size_t i = 0;
       i < order.size() && i < static_cast<std::size_t>(top_k); ++i) {
    reports.push_back(evaluate_attack(classifier, examples, {words[order[i]]},
                                      attacked_class, word_class,
                                      prepend_segment));
  }
  return reports;
}

std::string format_reports_text(const std::vector<AttackReport>& reports,
                                const Vocabulary& vocab) {
  std::ostringstream out;
  out << "direction  trigger                          n     before    after     drop\n";
  for (const auto& r : reports) {
    std::string trig;
    for (std::size_t i = 0; i < r.trigger.size(); ++i) {
      if (i) trig += ' ';
      trig += vocab.token(r.trigger[i]);
    }
    char line[256];
    std::snprintf(line, sizeof line, "%d->%d      %-32s %-5d %-9.4f %-9.4f %-9.4f\n",
                  r.source_class, r.target_class, trig.c_str(), r.n_examples,
                  r.accuracy_before, r.accuracy_after, r.drop());
    out << line;
  }
  return out.str();
}

void write_reports_csv(const std::vector<AttackReport>& reports,
                       const Vocabulary& vocab, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << "source_class,target_class,trigger,n_examples,accuracy_before,"
         "accuracy_after,drop\n";
  for (const auto& r : reports) {
    std::string trig;
    for (std::size_t i = 0; i < r.trigger.size(); ++i) {
      if (i) trig += ' ';
      trig += vocab.token(r.trigger[i]);
    }
    out << r.source_class << ',' << r.target_class << ',' << trig << ','
        << r.n_examples << ',' << format_double(r.accuracy_before) << ','
        << format_double(r.accuracy_after) << ',' << format_double(r.drop())
        << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace dftrig
