#include "dftrig/triggers.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace dftrig {

namespace {

// Index at which a trigger lands for the given segment.
std::size_t insertion_index(const TokenSeq& seq, int prepend_segment) {
  if (prepend_segment == 0) return 0;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (seq.segments[i] == prepend_segment) return i;
  }
  throw IndexError("prepend segment not present in sequence");
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

TokenSeq apply_trigger(const TokenSeq& seq, const std::vector<int>& trigger,
                       int prepend_segment) {
  if (trigger.empty()) return seq;
  const std::size_t at = insertion_index(seq, prepend_segment);
  TokenSeq out;
  out.ids.reserve(seq.size() + trigger.size());
  out.segments.reserve(seq.size() + trigger.size());
  out.ids.insert(out.ids.end(), seq.ids.begin(),
                 seq.ids.begin() + static_cast<std::ptrdiff_t>(at));
  out.segments.insert(out.segments.end(), seq.segments.begin(),
                      seq.segments.begin() + static_cast<std::ptrdiff_t>(at));
  for (int id : trigger) {
    out.ids.push_back(id);
    out.segments.push_back(prepend_segment);
  }
  out.ids.insert(out.ids.end(), seq.ids.begin() + static_cast<std::ptrdiff_t>(at),
                 seq.ids.end());
  out.segments.insert(out.segments.end(),
                      seq.segments.begin() + static_cast<std::ptrdiff_t>(at),
                      seq.segments.end());
  return out;
}

std::vector<TriggerCandidate> mine_trigger(const TextClassifier& classifier,
                                           const Vocabulary& vocab,
                                           const std::vector<TokenSeq>& batch,
                                           const TriggerConfig& config,
                                           const CandidateMask& mask) {
  if (config.source_class == config.target_class) {
    throw InvalidConfigError("target class must differ from source class");
  }
  if (config.target_class < 0 ||
      config.target_class >= classifier.config().num_classes ||
      config.source_class < 0 ||
      config.source_class >= classifier.config().num_classes) {
    throw InvalidConfigError("trigger class out of range");
  }
  if (batch.empty()) throw InvalidConfigError("empty trigger batch");
  if (config.trigger_length < 1) throw InvalidConfigError("trigger_length must be >= 1");

  const int target = config.target_class;
  const int segment = config.prepend_segment;
  for (const auto& seq : batch) insertion_index(seq, segment);  // validate up front

  SequenceObjective objective;
  // Mean over the batch; per-example terms land in slots and are reduced in
  // index order so the result is independent of the worker count.
  objective.loss = [&, target, segment](const std::vector<int>& trigger) {
    std::vector<double> losses(batch.size());
    parallel_for(batch.size(), [&](std::size_t i) {
      losses[i] =
          classifier.task_loss(apply_trigger(batch[i], trigger, segment), target);
    });
    double sum = 0.0;
    for (double v : losses) sum += v;
    return sum / static_cast<double>(batch.size());
  };
  objective.gradient_at = [&, target, segment](const std::vector<int>& trigger,
                                               int position) {
    std::vector<Eigen::VectorXd> grads(batch.size());
    parallel_for(batch.size(), [&](std::size_t i) {
      const TokenSeq composed = apply_trigger(batch[i], trigger, segment);
      const int pos_arr[1] = {
          static_cast<int>(insertion_index(batch[i], segment)) + position};
      grads[i] = classifier.embedding_gradient(composed, target, pos_arr)
                     .position_gradients.front();
    });
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(classifier.config().embed_dim);
    for (const auto& g : grads) mean += g;
    return Eigen::VectorXd(mean / static_cast<double>(batch.size()));
  };

  std::vector<int> initial(static_cast<std::size_t>(config.trigger_length),
                           vocab.init_id());
  std::vector<int> positions(static_cast<std::size_t>(config.trigger_length));
  for (int i = 0; i < config.trigger_length; ++i)
    positions[static_cast<std::size_t>(i)] = i;

  const SweepResult swept = sweep_optimize(initial, positions, objective,
                                           classifier.embeddings(), mask,
                                           config.beam);

  // Candidates: surviving beam plus the best-ever hypothesis, ascending loss.
  std::vector<BeamHypothesis> pool = swept.final_beam;
  if (std::none_of(pool.begin(), pool.end(), [&](const BeamHypothesis& h) {
        return h.ids == swept.best.ids;
      })) {
    pool.push_back(swept.best);
  }
  std::sort(pool.begin(), pool.end(), [](const BeamHypothesis& a,
                                         const BeamHypothesis& b) {
    return a.loss != b.loss ? a.loss < b.loss : a.ids < b.ids;
  });
  if (static_cast<int>(pool.size()) > config.beam.width) {
    pool.resize(static_cast<std::size_t>(config.beam.width));
  }

  std::vector<TriggerCandidate> out;
  out.reserve(pool.size());
  for (const auto& hyp : pool) {
    TriggerCandidate cand;
    cand.tokens = hyp.ids;
    cand.batch_loss = hyp.loss;
    std::vector<char> flips(batch.size());
    parallel_for(batch.size(), [&](std::size_t i) {
      flips[i] =
          classifier.predict(apply_trigger(batch[i], hyp.ids, segment)) == target;
    });
    cand.flip_rate =
        static_cast<double>(std::count(flips.begin(), flips.end(), char(1))) /
        static_cast<double>(batch.size());
    out.push_back(std::move(cand));
  }
  return out;
}

void save_trigger_report(const TriggerReport& report, const Vocabulary& vocab,
                         const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << "# trigger report v1\n";
  out << "source_class\t" << report.config.source_class << '\n';
  out << "target_class\t" << report.config.target_class << '\n';
  out << "trigger_length\t" << report.config.trigger_length << '\n';
  out << "prepend_segment\t" << report.config.prepend_segment << '\n';
  out << "beam_width\t" << report.config.beam.width << '\n';
  out << "candidates_per_position\t" << report.config.beam.candidates_per_position
      << '\n';
  out << "sample_top_n\t" << report.config.beam.sample_top_n << '\n';
  out << "rng_seed\t" << report.config.beam.rng_seed << '\n';
  out << "max_sweeps\t" << report.config.beam.max_sweeps << '\n';
  out << "batch_size\t" << report.batch_size << '\n';
  int rank = 1;
  for (const auto& cand : report.candidates) {
    out << "candidate\t" << rank++ << '\t';
    for (std::size_t i = 0; i < cand.tokens.size(); ++i) {
      if (i) out << ' ';
      out << vocab.token(cand.tokens[i]);
    }
    out << '\t' << format_double(cand.batch_loss) << '\t'
        << format_double(cand.flip_rate) << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

TriggerReport load_trigger_report(const Vocabulary& vocab,
                                  const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open trigger report: " + path.string());
  TriggerReport report;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    std::string key;
    std::getline(row, key, '\t');
    try {
      if (key == "source_class") {
        row >> report.config.source_class;
      } else if (key == "target_class") {
        row >> report.config.target_class;
      } else if (key == "trigger_length") {
        row >> report.config.trigger_length;
      } else if (key == "prepend_segment") {
        row >> report.config.prepend_segment;
      } else if (key == "beam_width") {
        row >> report.config.beam.width;
      } else if (key == "candidates_per_position") {
        row >> report.config.beam.candidates_per_position;
      } else if (key == "sample_top_n") {
        row >> report.config.beam.sample_top_n;
      } else if (key == "rng_seed") {
        row >> report.config.beam.rng_seed;
      } else if (key == "max_sweeps") {
        row >> report.config.beam.max_sweeps;
      } else if (key == "batch_size") {
        row >> report.batch_size;
      } else if (key == "candidate") {
        std::string rank, tokens, loss, flip;
        std::getline(row, rank, '\t');
        std::getline(row, tokens, '\t');
        std::getline(row, loss, '\t');
        std::getline(row, flip, '\t');
        TriggerCandidate cand;
        std::istringstream ts(tokens);
        std::string w;
        while (ts >> w) cand.tokens.push_back(vocab.id(w));
        cand.batch_loss = std::stod(loss);
        cand.flip_rate = std::stod(flip);
        report.candidates.push_back(std::move(cand));
      } else {
        throw IoError("unknown key '" + key + "' in " + path.string());
      }
    } catch (const std::invalid_argument&) {
      throw IoError("malformed trigger report: " + path.string());
    }
  }
  return report;
}

}  // namespace dftrig
