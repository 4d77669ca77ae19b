#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "dftrig/common.hpp"
#include "dftrig/model.hpp"
#include "dftrig/vocab.hpp"

namespace dftrig {

// First-order Taylor scores for replacing one position's token:
// score(w) = (e_w - e_current)^T g. Ineligible ids are +infinity; the current
// token's score is exactly 0 when eligible.
struct FlipScores {
  int position = -1;
  std::vector<double> scores;  // per vocabulary id
};

struct BeamConfig {
  int width = 3;                    // B
  int candidates_per_position = 10; // expansions per hypothesis
  int sample_top_n = 1;             // N; 1 = greedy candidate selection
  std::uint64_t rng_seed = 0;
  int max_sweeps = 10;
};

// score is the true loss of the sequence, recomputed via forward passes;
// Taylor scores only ever choose candidates.
struct BeamHypothesis {
  std::vector<int> ids;
  double loss = 0.0;
};

// Abstract objective over fixed-length id sequences. The callables close over
// whatever context the caller needs (model + target class for impressions;
// model + batch + target for triggers).
struct SequenceObjective {
  std::function<double(const std::vector<int>&)> loss;
  // d-vector gradient of the loss w.r.t. the embedding at `position`.
  std::function<Eigen::VectorXd(const std::vector<int>&, int position)> gradient_at;
};

std::vector<double> taylor_scores(const Eigen::VectorXd& gradient,
                                  int current_id,
                                  const Eigen::MatrixXd& table,
                                  const CandidateMask& mask);

FlipScores taylor_scores_at(const Eigen::VectorXd& gradient, int position,
                            int current_id, const Eigen::MatrixXd& table,
                            const CandidateMask& mask);

// Exhaustive oracle: true task loss for every eligible substitution at
// `position`; returns the exact minimizer (lowest id on ties).
std::pair<int, double> brute_force_best_token(const TextClassifier& classifier,
                                              const TokenSeq& seq, int position,
                                              int target_class,
                                              const CandidateMask& mask);

std::vector<BeamHypothesis> beam_step(const std::vector<BeamHypothesis>& hypotheses,
                                      int position,
                                      const SequenceObjective& objective,
                                      const Eigen::MatrixXd& table,
                                      const CandidateMask& mask,
                                      const BeamConfig& config, Rng& rng);

struct SweepResult {
  BeamHypothesis best;               // lowest true loss ever seen
  std::vector<BeamHypothesis> final_beam;
  std::vector<double> loss_history;  // best-ever loss after each sweep
  int sweeps_run = 0;
  bool converged = false;            // a full sweep changed nothing
};

// Left-to-right sweeps of beam_step over the mutable positions until a sweep
// changes no hypothesis or max_sweeps is reached.
SweepResult sweep_optimize(const std::vector<int>& initial,
                           const std::vector<int>& mutable_positions,
                           const SequenceObjective& objective,
                           const Eigen::MatrixXd& table,
                           const CandidateMask& mask, const BeamConfig& config);

}  // namespace dftrig
