// Acceptance suite for the toy setup: K=2, |V|=204, d=16, h=32, 2000 train
// examples. One PASS/FAIL line per criterion.

#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "dftrig/analysis.hpp"
#include "dftrig/corpus.hpp"
#include "dftrig/evalharness.hpp"
#include "dftrig/impressions.hpp"
#include "dftrig/model.hpp"
#include "dftrig/triggers.hpp"
#include "testutil.hpp"

namespace dftrig {
namespace {

namespace fs = std::filesystem;

void report(int criterion, const std::string& name, bool pass) {
  std::cout << "[criterion " << criterion << "] " << name << ": "
            << (pass ? "PASS" : "FAIL") << std::endl;
  EXPECT_TRUE(pass) << "criterion " << criterion << " (" << name << ")";
}

std::vector<int> lexicon_ids(const Vocabulary& vocab, const CorpusSpec& spec,
                             int cls) {
  return tokenize(vocab, spec.planted_lexicon[static_cast<std::size_t>(cls)]);
}

CandidateMask lexicon_mask(const Vocabulary& vocab, const CorpusSpec& spec) {
  std::vector<std::string> banned;
  for (const auto& lex : spec.planted_lexicon) {
    banned.insert(banned.end(), lex.begin(), lex.end());
  }
  return make_candidate_mask(vocab, banned);
}

struct Scenario {
  CorpusSpec spec = testutil::canonical_spec();
  Vocabulary vocab = build_vocabulary(spec);
  Corpus corpus = generate_corpus(spec, vocab);
  TextClassifier model = load_via_checkpoint();  // trained, round-tripped
  TextClassifier victim = make_victim();         // different seed, h=48
  CandidateMask full_mask = make_candidate_mask(vocab, {});
  CandidateMask trigger_mask = lexicon_mask(vocab, spec);
  std::vector<ClassImpression> impressions0 = make_impressions(0, 100);
  std::vector<ClassImpression> impressions1 = make_impressions(1, 200);
  std::vector<TriggerCandidate> trigger = mine_canonical_trigger();

  static const Scenario& get() {
    static Scenario s;
    return s;
  }

 private:
  TextClassifier train_fresh(std::uint64_t init_seed, std::uint64_t train_seed,
                             int hidden) const {
    TextClassifier m(testutil::canonical_model_config(vocab.size(), false, hidden),
                     init_seed);
    train_classifier(m, corpus.train, corpus.validation,
                     testutil::canonical_train_config(train_seed));
    return m;
  }

  // The attack side must work from the persisted checkpoint alone.
  TextClassifier load_via_checkpoint() const {
    const auto dir = testutil::scratch_dir("acceptance_ckpt");
    save_checkpoint(train_fresh(42, 7, 32), dir / "model.ckpt");
    return load_checkpoint(dir / "model.ckpt");
  }

  TextClassifier make_victim() const { return train_fresh(43, 8, 48); }

  std::vector<ClassImpression> make_impressions(int cls, std::uint64_t seed) const {
    ImpressionConfig cfg;
    cfg.target_class = cls;
    cfg.lengths = {4, 6, 8, 10};
    cfg.seeds_per_combo = 3;
    cfg.beam.sample_top_n = 3;
    cfg.beam.rng_seed = seed;
    return generate_impression_set(model, vocab, full_mask, cfg);
  }

  std::vector<TriggerCandidate> mine_canonical_trigger() const {
    std::vector<TokenSeq> batch;
    for (const auto& imp : impressions0) batch.push_back(imp.seq);
    TriggerConfig cfg;
    cfg.source_class = 0;
    cfg.target_class = 1;
    cfg.trigger_length = 3;
    cfg.beam.rng_seed = 5;
    return mine_trigger(model, vocab, batch, cfg, trigger_mask);
  }
};

TEST(Acceptance, Criterion1ModelFidelity) {
  const auto& s = Scenario::get();
  const double test_acc = accuracy(s.model, s.corpus.test);

  constexpr double kEps = 1e-4;
  constexpr double kRelTol = 1e-5;
  Rng rng(31);
  int probes = 0;
  bool gradients_ok = true;
  while (probes < 100) {
    const auto& ex =
        s.corpus.test[static_cast<std::size_t>(rng.uniform_int(
            static_cast<int>(s.corpus.test.size())))];
    const int position = rng.uniform_int(static_cast<int>(ex.seq.size()));
    if (ex.seq.ids[static_cast<std::size_t>(position)] == 1) continue;
    const int target = rng.uniform_int(2);
    const int component = rng.uniform_int(16);
    const int pos_arr[1] = {position};
    const double analytic =
        s.model.embedding_gradient(ex.seq, target, pos_arr)
            .position_gradients.front()(component);
    const double numeric = testutil::finite_difference_component(
        s.model, ex.seq, target, position, component, kEps);
    const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    if (std::abs(analytic - numeric) / scale > kRelTol) gradients_ok = false;
    ++probes;
  }
  report(1, "model fidelity (test acc >= 0.95, gradients vs finite differences)",
         test_acc >= 0.95 && gradients_ok);
  EXPECT_GE(test_acc, 0.95);
  EXPECT_TRUE(gradients_ok);
}

TEST(Acceptance, Criterion2TaylorApproximationQuality) {
  const auto& s = Scenario::get();
  std::vector<int> eligible;
  for (int w = 0; w < s.vocab.size(); ++w) {
    if (s.full_mask.is_eligible(w)) eligible.push_back(w);
  }
  Rng rng(47);
  int hits = 0;
  const int trials = 200;
  const double scales[3] = {0.1, 0.3, 0.5};
  for (int t = 0; t < trials; ++t) {
    const TextClassifier probe(
        testutil::canonical_model_config(s.vocab.size(), false),
        static_cast<std::uint64_t>(9000 + t), scales[t % 3]);
    const int len = 4 + rng.uniform_int(5);
    std::vector<int> ids;
    for (int i = 0; i < len; ++i) {
      ids.push_back(eligible[static_cast<std::size_t>(
          rng.uniform_int(static_cast<int>(eligible.size())))]);
    }
    const TokenSeq seq = TokenSeq::single(ids);
    const int position = rng.uniform_int(len);
    const int target = rng.uniform_int(2);

    const int pos_arr[1] = {position};
    const auto gradient = probe.embedding_gradient(seq, target, pos_arr)
                              .position_gradients.front();
    const auto scores =
        taylor_scores(gradient, seq.ids[static_cast<std::size_t>(position)],
                      probe.embeddings(), s.full_mask);
    std::vector<int> ranked = eligible;
    std::sort(ranked.begin(), ranked.end(), [&](int a, int b) {
      const double sa = scores[static_cast<std::size_t>(a)];
      const double sb = scores[static_cast<std::size_t>(b)];
      return sa != sb ? sa < sb : a < b;
    });
    const auto [oracle_token, oracle_loss] =
        brute_force_best_token(probe, seq, position, target, s.full_mask);
    const auto top_end = ranked.begin() + std::min<std::size_t>(10, ranked.size());
    hits += std::find(ranked.begin(), top_end, oracle_token) != top_end;
  }
  const double rate = static_cast<double>(hits) / trials;
  report(2, "Taylor top-10 contains the brute-force best flip (rate >= 0.80)",
         rate >= 0.80);
  std::cout << "    top-10 hit rate: " << rate << '\n';
}

TEST(Acceptance, Criterion3ImpressionsDataFreeAndFaithful) {
  const auto& s = Scenario::get();
  bool confidence_ok = true;
  bool lexicon_ok = true;
  for (int cls = 0; cls < 2; ++cls) {
    const auto& imps = cls == 0 ? s.impressions0 : s.impressions1;
    const auto lex = lexicon_ids(s.vocab, s.spec, cls);
    long in_lexicon = 0;
    long total = 0;
    for (const auto& imp : imps) {
      if (imp.confidence < 0.99) confidence_ok = false;
      for (int id : imp.seq.ids) {
        if (s.vocab.is_special(id)) continue;
        ++total;
        in_lexicon += std::count(lex.begin(), lex.end(), id) > 0;
      }
    }
    const double frac = static_cast<double>(in_lexicon) / static_cast<double>(total);
    std::cout << "    class " << cls << ": lexicon fraction " << frac
              << " over " << imps.size() << " impressions\n";
    if (frac < 0.60) lexicon_ok = false;
  }
  report(3, "impressions from checkpoint alone: confidence >= 0.99, >= 60% lexicon",
         confidence_ok && lexicon_ok);
}

TEST(Acceptance, Criterion4DataFreeTriggerEfficacy) {
  const auto& s = Scenario::get();
  ASSERT_GE(s.impressions0.size(), 12u);
  const AttackReport r = evaluate_attack(
      s.model, s.corpus.test, s.trigger.front().tokens, 0, 1, 0);
  std::cout << "    trigger accuracy " << r.accuracy_before << " -> "
            << r.accuracy_after << '\n';
  report(4, "3-token data-free trigger: >= 0.90 before, <= 0.20 after",
         r.accuracy_before >= 0.90 && r.accuracy_after <= 0.20);
}

TEST(Acceptance, Criterion5DataFreeMatchesDataBased) {
  const auto& s = Scenario::get();
  std::vector<TokenSeq> real_batch;
  for (const auto& ex : s.corpus.validation) {
    if (ex.label == 0) real_batch.push_back(ex.seq);
  }
  TriggerConfig cfg;
  cfg.source_class = 0;
  cfg.target_class = 1;
  cfg.trigger_length = 3;
  cfg.beam.rng_seed = 5;  // identical beam config
  const auto based = mine_trigger(s.model, s.vocab, real_batch, cfg, s.trigger_mask);

  const AttackReport free_r = evaluate_attack(
      s.model, s.corpus.test, s.trigger.front().tokens, 0, 1, 0);
  const AttackReport based_r =
      evaluate_attack(s.model, s.corpus.test, based.front().tokens, 0, 1, 0);
  const double gap = std::abs(free_r.drop() - based_r.drop());
  std::cout << "    data-free drop " << free_r.drop() << ", data-based drop "
            << based_r.drop() << ", gap " << gap << '\n';
  report(5, "data-free drop within 15 points of the data-based drop", gap <= 0.15);
}

TEST(Acceptance, Criterion6TransferAndNegativeControl) {
  const auto& s = Scenario::get();
  const AttackReport transfer = transfer_evaluate(
      s.victim, s.corpus.test, s.trigger.front().tokens, 0, 1, 0);
  std::cout << "    transfer accuracy " << transfer.accuracy_before << " -> "
            << transfer.accuracy_after << '\n';

  std::vector<int> eligible;
  for (int w = 0; w < s.vocab.size(); ++w) {
    if (s.trigger_mask.is_eligible(w)) eligible.push_back(w);
  }
  std::vector<double> drops;
  for (int seed = 0; seed < 20; ++seed) {
    Rng rng(static_cast<std::uint64_t>(5000 + seed));
    std::vector<int> random_trigger;
    for (int i = 0; i < 3; ++i) {
      random_trigger.push_back(eligible[static_cast<std::size_t>(
          rng.uniform_int(static_cast<int>(eligible.size())))]);
    }
    drops.push_back(
        evaluate_attack(s.model, s.corpus.test, random_trigger, 0, 1, 0).drop());
  }
  std::sort(drops.begin(), drops.end());
  const double median = (drops[9] + drops[10]) / 2.0;
  std::cout << "    random-trigger median drop " << median << '\n';
  report(6, "transfer drop >= 30 points, random-control median drop <= 10",
         transfer.drop() >= 0.30 && median <= 0.10);
}

TEST(Acceptance, Criterion7HypothesisOnlyParity) {
  const CorpusSpec pair_spec = testutil::canonical_spec(/*pair_mode=*/true);
  const Vocabulary vocab = build_vocabulary(pair_spec);
  const Corpus corpus = generate_corpus(pair_spec, vocab);
  TextClassifier model(testutil::canonical_model_config(vocab.size(), true), 42);
  train_classifier(model, corpus.train, corpus.validation,
                   testutil::canonical_train_config(7));
  const CandidateMask full = make_candidate_mask(vocab, {});
  const CandidateMask masked = lexicon_mask(vocab, pair_spec);

  auto impressions_for = [&](PairTarget mode, std::uint64_t seed) {
    ImpressionConfig cfg;
    cfg.target_class = 0;
    cfg.lengths = {4, 5, 6, 8};
    cfg.seeds_per_combo = 3;
    cfg.beam.sample_top_n = 3;
    cfg.beam.rng_seed = seed;
    cfg.pair_target = mode;
    return generate_impression_set(model, vocab, full, cfg);
  };
  auto drop_for = [&](const std::vector<ClassImpression>& imps) {
    std::vector<TokenSeq> batch;
    for (const auto& imp : imps) batch.push_back(imp.seq);
    TriggerConfig cfg;
    cfg.source_class = 0;
    cfg.target_class = 1;
    cfg.trigger_length = 3;
    cfg.prepend_segment = 1;
    cfg.beam.rng_seed = 5;
    const auto mined = mine_trigger(model, vocab, batch, cfg, masked);
    return evaluate_attack(model, corpus.test, mined.front().tokens, 0, 1, 1)
        .drop();
  };

  const double drop_both = drop_for(impressions_for(PairTarget::kBothSegments, 300));
  const double drop_hyp =
      drop_for(impressions_for(PairTarget::kSegmentOneOnly, 400));
  const double gap = std::abs(drop_both - drop_hyp);
  std::cout << "    full-pair drop " << drop_both << ", hypothesis-only drop "
            << drop_hyp << ", gap " << gap << '\n';
  report(7, "hypothesis-only trigger drop within 15 points of full-pair",
         gap <= 0.15 && drop_both >= 0.30);
}

TEST(Acceptance, Criterion8ArtifactStatistics) {
  const auto& s = Scenario::get();
  const CorpusIndex index(s.corpus.train, s.vocab.size(), 2);

  // Distinct non-special impression words with their impression class.
  std::vector<std::pair<int, int>> impression_words;
  std::set<std::pair<int, int>> seen;
  for (const auto* imps : {&s.impressions0, &s.impressions1}) {
    for (const auto& imp : *imps) {
      for (int id : imp.seq.ids) {
        if (s.vocab.is_special(id)) continue;
        if (seen.insert({id, imp.target_class}).second) {
          impression_words.emplace_back(id, imp.target_class);
        }
      }
    }
  }
  ASSERT_FALSE(impression_words.empty());

  std::vector<double> imp_entropy;
  std::vector<double> imp_percentile;
  for (const auto& [word, cls] : impression_words) {
    imp_entropy.push_back(conditional_entropy(index, word));
    imp_percentile.push_back(pmi_percentile(index, word, cls));
  }

  // Size-matched uniform random word sample (non-special ids).
  Rng rng(77);
  std::vector<double> rand_entropy;
  for (std::size_t i = 0; i < impression_words.size(); ++i) {
    const int word = 3 + rng.uniform_int(s.vocab.size() - 3);
    rand_entropy.push_back(conditional_entropy(index, word));
  }

  auto mean = [](const std::vector<double>& v) {
    double sum = 0.0;
    for (double x : v) sum += x;
    return sum / static_cast<double>(v.size());
  };
  std::cout << "    impression words " << impression_words.size()
            << ", mean H " << mean(imp_entropy) << " vs random "
            << mean(rand_entropy) << ", mean own-class percentile "
            << mean(imp_percentile) << '\n';

  // Bootstrap both comparisons over 1000 resamples.
  Rng boot(123);
  const int resamples = 1000;
  int entropy_holds = 0;
  int percentile_holds = 0;
  const int m = static_cast<int>(impression_words.size());
  for (int b = 0; b < resamples; ++b) {
    double imp_h = 0.0;
    double rand_h = 0.0;
    double imp_pct = 0.0;
    for (int i = 0; i < m; ++i) {
      imp_h += imp_entropy[static_cast<std::size_t>(boot.uniform_int(m))];
      rand_h += rand_entropy[static_cast<std::size_t>(boot.uniform_int(m))];
      imp_pct += imp_percentile[static_cast<std::size_t>(boot.uniform_int(m))];
    }
    entropy_holds += imp_h / m < rand_h / m;
    percentile_holds += imp_pct / m >= 65.0;
  }
  const double entropy_rate = static_cast<double>(entropy_holds) / resamples;
  const double percentile_rate = static_cast<double>(percentile_holds) / resamples;
  std::cout << "    bootstrap: entropy " << entropy_rate << ", percentile "
            << percentile_rate << '\n';

  // Impression-word attack (single prepended word, best cross-class pair).
  const auto reports =
      impression_word_attack(s.model, s.impressions0, s.impressions1,
                             s.corpus.test, 1, lexicon_ids(s.vocab, s.spec, 1),
                             5, 0);
  double best_drop = 0.0;
  for (const auto& r : reports) best_drop = std::max(best_drop, r.drop());
  std::cout << "    best impression-word drop " << best_drop << '\n';

  report(8,
         "impression words: lower entropy, percentile >= 65 (both >= 95% of "
         "bootstraps), best word drop >= 40 points",
         entropy_rate >= 0.95 && percentile_rate >= 0.95 && best_drop >= 0.40);
}

TEST(Acceptance, Criterion9PipelineDeterminism) {
  const char* tool = DFTRIG_TOOL_PATH;
  auto run_in = [&](const fs::path& dir, const std::string& args) {
    const std::string cmd = "cd " + dir.string() + " && " + std::string(tool) +
                            " " + args + " >/dev/null 2>&1";
    return WEXITSTATUS(std::system(cmd.c_str()));
  };
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
  };
  auto run_pipeline = [&](const fs::path& dir) {
    ASSERT_EQ(run_in(dir, "gen-corpus --out-dir ."), 0);
    ASSERT_EQ(run_in(dir, "train --vocab vocab.txt --train corpus.train.tsv "
                          "--validation corpus.validation.tsv --out-dir ."),
              0);
    ASSERT_EQ(run_in(dir, "impress --checkpoint model.ckpt --vocab vocab.txt "
                          "--class 0 --seed 100 --out-dir ."),
              0);
    ASSERT_EQ(run_in(dir, "mine --checkpoint model.ckpt --vocab vocab.txt "
                          "--impressions impressions_c0.tsv --source 0 "
                          "--target 1 --seed 5 --exclude-file lexicon.txt "
                          "--out-dir ."),
              0);
    ASSERT_EQ(run_in(dir, "attack --checkpoint model.ckpt --vocab vocab.txt "
                          "--corpus corpus.test.tsv --trigger-report "
                          "trigger_0to1.txt --source 0 --target 1 --out-dir ."),
              0);
  };
  const fs::path a = testutil::scratch_dir("acceptance_det_a");
  const fs::path b = testutil::scratch_dir("acceptance_det_b");
  run_pipeline(a);
  run_pipeline(b);
  bool identical = true;
  for (const auto& entry : fs::directory_iterator(a)) {
    const auto name = entry.path().filename();
    if (slurp(entry.path()) != slurp(b / name)) {
      identical = false;
      ADD_FAILURE() << "mismatch in " << name;
    }
  }
  report(9, "pipeline reruns produce byte-identical outputs", identical);
}

}  // namespace
}  // namespace dftrig
