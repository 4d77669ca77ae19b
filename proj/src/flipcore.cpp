#include "dftrig/flipcore.hpp"

#include <algorithm>
#include <limits>
#include <map>

namespace dftrig {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Candidate ids at one position, ordered by (taylor score, id) ascending.
std::vector<int> ranked_candidates(const std::vector<double>& scores) {
  std::vector<int> ids;
  ids.reserve(scores.size());
  for (int w = 0; w < static_cast<int>(scores.size()); ++w) {
    if (std::isfinite(scores[static_cast<std::size_t>(w)])) ids.push_back(w);
  }
  std::sort(ids.begin(), ids.end(), [&](int a, int b) {
    const double sa = scores[static_cast<std::size_t>(a)];
    const double sb = scores[static_cast<std::size_t>(b)];
    return sa != sb ? sa < sb : a < b;
  });
  return ids;
}

}  // namespace

std::vector<double> taylor_scores(const Eigen::VectorXd& gradient,
                                  int current_id,
                                  const Eigen::MatrixXd& table,
                                  const CandidateMask& mask) {
  if (gradient.size() != table.cols()) {
    throw ShapeError("gradient dimension does not match embedding table");
  }
  if (static_cast<int>(mask.eligible.size()) != static_cast<int>(table.rows())) {
    throw ShapeError("mask size does not match embedding table");
  }
  if (current_id < 0 || current_id >= static_cast<int>(table.rows())) {
    throw IndexError("current token id out of range");
  }
  // score(w) = dot(w) - dot(current); the current token lands on exactly 0.
  const Eigen::VectorXd dots = table * gradient;
  const double current_dot = dots(current_id);
  std::vector<double> scores(static_cast<std::size_t>(table.rows()), kInf);
  for (int w = 0; w < static_cast<int>(table.rows()); ++w) {
    if (mask.is_eligible(w)) scores[static_cast<std::size_t>(w)] = dots(w) - current_dot;
  }
  return scores;
}

FlipScores taylor_scores_at(const Eigen::VectorXd& gradient, int position,
                            int current_id, const Eigen::MatrixXd& table,
                            const CandidateMask& mask) {
  FlipScores fs;
  fs.position = position;
  fs.scores = taylor_scores(gradient, current_id, table, mask);
  return fs;
}

std::pair<int, double> brute_force_best_token(const TextClassifier& classifier,
                                              const TokenSeq& seq, int position,
                                              int target_class,
                                              const CandidateMask& mask) {
  if (position < 0 || position >= static_cast<int>(seq.ids.size())) {
    throw IndexError("position out of range");
  }
  const int at = seq.ids[static_cast<std::size_t>(position)];
  if (at == classifier.pad_id() || at == classifier.sep_id()) {
    throw IndexError("position is not mutable (PAD/SEP)");
  }
  std::vector<int> candidates;
  for (int w = 0; w < static_cast<int>(mask.eligible.size()); ++w) {
    if (mask.is_eligible(w)) candidates.push_back(w);
  }
  if (candidates.empty()) throw EmptyCandidateError("no eligible tokens");

  std::vector<double> losses(candidates.size());
  parallel_for(candidates.size(), [&](std::size_t i) {
    TokenSeq probe = seq;
    probe.ids[static_cast<std::size_t>(position)] = candidates[i];
    losses[i] = classifier.task_loss(probe, target_class);
  });
  std::size_t best = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    if (losses[i] < losses[best]) best = i;  // candidates ascend, so ties keep lower id
  }
  return {candidates[best], losses[best]};
}

std::vector<BeamHypothesis> beam_step(const std::vector<BeamHypothesis>& hypotheses,
                                      int position,
                                      const SequenceObjective& objective,
                                      const Eigen::MatrixXd& table,
                                      const CandidateMask& mask,
                                      const BeamConfig& config, Rng& rng) {
  if (hypotheses.empty()) throw InvalidConfigError("empty beam");
  if (config.width < 1 || config.candidates_per_position < 1 ||
      config.sample_top_n < 1 ||
      config.sample_top_n > config.candidates_per_position) {
    throw InvalidConfigError("bad beam config");
  }
  const std::size_t length = hypotheses.front().ids.size();
  for (const auto& h : hypotheses) {
    if (h.ids.size() != length) throw ShapeError("hypotheses differ in length");
  }
  if (position < 0 || position >= static_cast<int>(length)) {
    throw IndexError("beam position out of range");
  }

  // Expand every hypothesis, dedupe sequences, then rescore by true loss.
  std::vector<std::vector<int>> unique_seqs;
  std::map<std::vector<int>, std::size_t> seen;
  for (const auto& hyp : hypotheses) {
    const Eigen::VectorXd gradient = objective.gradient_at(hyp.ids, position);
    const std::vector<double> scores = taylor_scores(
        gradient, hyp.ids[static_cast<std::size_t>(position)], table, mask);
    const std::vector<int> ranked = ranked_candidates(scores);
    if (ranked.empty()) throw EmptyCandidateError("no eligible tokens");

    std::vector<int> chosen;
    if (config.sample_top_n == 1) {
      const int take = std::min<int>(config.candidates_per_position,
                                     static_cast<int>(ranked.size()));
      chosen.assign(ranked.begin(), ranked.begin() + take);
    } else {
      const int pool = std::min<int>(config.sample_top_n,
                                     static_cast<int>(ranked.size()));
      std::vector<char> drawn(static_cast<std::size_t>(pool), 0);
      for (int i = 0; i < config.candidates_per_position; ++i) {
        const int pick = rng.uniform_int(pool);
        if (!drawn[static_cast<std::size_t>(pick)]) {
          drawn[static_cast<std::size_t>(pick)] = 1;
          chosen.push_back(ranked[static_cast<std::size_t>(pick)]);
        }
      }
    }
    for (int token : chosen) {
      std::vector<int> next = hyp.ids;
      next[static_cast<std::size_t>(position)] = token;
      if (seen.emplace(next, unique_seqs.size()).second) {
        unique_seqs.push_back(std::move(next));
      }
    }
  }

  std::vector<double> losses(unique_seqs.size());
  parallel_for(unique_seqs.size(), [&](std::size_t i) {
    losses[i] = objective.loss(unique_seqs[i]);
  });

  std::vector<std::size_t> order(unique_seqs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (losses[a] != losses[b]) return losses[a] < losses[b];
    return unique_seqs[a] < unique_seqs[b];  // deterministic total order
  });

  std::vector<BeamHypothesis> next;
  const std::size_t keep = std::min<std::size_t>(
      static_cast<std::size_t>(config.width), order.size());
  next.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) {
    next.push_back({unique_seqs[order[i]], losses[order[i]]});
  }
  return next;
}

SweepResult sweep_optimize(const std::vector<int>& initial,
                           const std::vector<int>& mutable_positions,
                           const SequenceObjective& objective,
                           const Eigen::MatrixXd& table,
                           const CandidateMask& mask, const BeamConfig& config) {
  if (mutable_positions.empty()) {
    throw InvalidConfigError("no mutable positions");
  }
  for (int pos : mutable_positions) {
    if (pos < 0 || pos >= static_cast<int>(initial.size())) {
      throw IndexError("mutable position out of range");
    }
  }
  Rng rng(config.rng_seed);
  SweepResult result;
  result.best = {initial, objective.loss(initial)};
  std::vector<BeamHypothesis> beam = {result.best};

  for (int sweep = 0; sweep < config.max_sweeps; ++sweep) {
    std::vector<std::vector<int>> before;
    before.reserve(beam.size());
    for (const auto& h : beam) before.push_back(h.ids);

    for (int pos : mutable_positions) {
      beam = beam_step(beam, pos, objective, table, mask, config, rng);
      // Ties update toward the newer front hypothesis.
      if (beam.front().loss <= result.best.loss) result.best = beam.front();
    }
    ++result.sweeps_run;
    result.loss_history.push_back(result.best.loss);

    std::vector<std::vector<int>> after;
    after.reserve(beam.size());
    for (const auto& h : beam) after.push_back(h.ids);
    if (after == before) {
      result.converged = true;
      break;
    }
  }
  result.final_beam = std::move(beam);
  return result;
}

}  // namespace dftrig
