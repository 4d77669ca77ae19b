#include "dftrig/vocab.hpp"

#include <gtest/gtest.h>

#include "testutil.hpp"

namespace dftrig {
namespace {

TEST(Vocabulary, CountsSpecialsPlusWords) {
  // lexicons {pos:[good,fine], neg:[bad,poor]}, neutral [it,was] -> 6 words + 3 specials
  const Vocabulary vocab =
      make_vocabulary({{"good", "fine"}, {"bad", "poor"}, {"it", "was"}});
  EXPECT_EQ(vocab.size(), 9);
  EXPECT_EQ(vocab.pad_id(), 0);
  EXPECT_EQ(vocab.sep_id(), 1);
  EXPECT_EQ(vocab.init_id(), 2);
  // lexicographic after specials
  EXPECT_EQ(vocab.token(3), "bad");
  EXPECT_EQ(vocab.id(vocab.token(5)), 5);
}

TEST(Vocabulary, DenseIdsRoundTrip) {
  const Vocabulary vocab = build_vocabulary(testutil::canonical_spec());
  for (int i = 0; i < vocab.size(); ++i) {
    EXPECT_EQ(vocab.id(vocab.token(i)), i);
  }
}

TEST(Vocabulary, DuplicateTokenIsInvalidSpec) {
  EXPECT_THROW(make_vocabulary({{"good"}, {"good"}}), InvalidSpecError);
}

TEST(Vocabulary, SingleClassSpecIsInvalid) {
  CorpusSpec spec = testutil::tiny_spec();
  spec.num_classes = 1;
  spec.planted_lexicon = {{"alpha"}};
  EXPECT_THROW(build_vocabulary(spec), InvalidSpecError);
}

TEST(Vocabulary, DeterministicAcrossBuilds) {
  const Vocabulary a = build_vocabulary(testutil::canonical_spec());
  const Vocabulary b = build_vocabulary(testutil::canonical_spec());
  EXPECT_EQ(a, b);
}

TEST(Tokenize, LooksUpIds) {
  const Vocabulary vocab =
      make_vocabulary({{"good", "fine"}, {"bad", "poor"}, {"it", "was"}});
  const auto ids = tokenize(vocab, {"good", "it"});
  EXPECT_EQ(ids, (std::vector<int>{vocab.id("good"), vocab.id("it")}));
  EXPECT_EQ(detokenize(vocab, ids), (std::vector<std::string>{"good", "it"}));
}

TEST(Tokenize, EmptyInEmptyOut) {
  const Vocabulary vocab = make_vocabulary({{"a"}, {"b"}});
  EXPECT_TRUE(tokenize(vocab, {}).empty());
}

TEST(Tokenize, UnknownTokenThrows) {
  const Vocabulary vocab = make_vocabulary({{"a"}, {"b"}});
  EXPECT_THROW(tokenize(vocab, {"zebra"}), UnknownTokenError);
}

TEST(CandidateMask, ExcludedAndSpecialsIneligible) {
  const CorpusSpec spec = testutil::canonical_spec();
  const Vocabulary vocab = build_vocabulary(spec);
  std::vector<std::string> excluded = spec.planted_lexicon[0];
  excluded.insert(excluded.end(), spec.planted_lexicon[1].begin(),
                  spec.planted_lexicon[1].end());
  const CandidateMask mask = make_candidate_mask(vocab, excluded);
  EXPECT_EQ(mask.count_eligible(),
            vocab.size() - 3 - static_cast<int>(excluded.size()));
  for (const auto& w : excluded) EXPECT_FALSE(mask.is_eligible(vocab.id(w)));
  for (const auto& w : spec.neutral_tokens) EXPECT_TRUE(mask.is_eligible(vocab.id(w)));
}

TEST(CandidateMask, EmptyExclusionKeepsAllNonSpecials) {
  const Vocabulary vocab = build_vocabulary(testutil::canonical_spec());
  const CandidateMask mask = make_candidate_mask(vocab, {});
  EXPECT_EQ(mask.count_eligible(), vocab.size() - 3);
  EXPECT_FALSE(mask.is_eligible(vocab.pad_id()));
  EXPECT_FALSE(mask.is_eligible(vocab.sep_id()));
  EXPECT_FALSE(mask.is_eligible(vocab.init_id()));
}

TEST(CandidateMask, UnknownExcludedTokenThrows) {
  const Vocabulary vocab = make_vocabulary({{"a"}, {"b"}});
  EXPECT_THROW(make_candidate_mask(vocab, {"zebra"}), UnknownTokenError);
}

TEST(VocabularyIo, FileRoundTrip) {
  const Vocabulary vocab = build_vocabulary(testutil::canonical_spec());
  const auto dir = testutil::scratch_dir("vocab_io");
  save_vocabulary(vocab, dir / "vocab.txt");
  const Vocabulary loaded = load_vocabulary(dir / "vocab.txt");
  EXPECT_EQ(vocab, loaded);
}

}  // namespace
}  // namespace dftrig
