#include <algorithm>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "support/split_checks.hpp"
#include "temporec/error.hpp"
#include "temporec/protocols.hpp"
#include "temporec/rng.hpp"

namespace temporec {
namespace {

UserEvents events_at(UserIndex user, std::vector<Timestamp> times) {
  UserEvents ue{user, {}};
  for (std::size_t k = 0; k < times.size(); ++k) {
    ue.events.push_back({static_cast<ItemIndex>(k), times[k]});
  }
  return ue;
}

std::vector<Timestamp> times_of(const std::vector<TimedItem>& v) {
  std::vector<Timestamp> out;
  for (const auto& e : v) out.push_back(e.timestamp);
  return out;
}

std::vector<UserIndex> iota_users(std::size_t n) {
  std::vector<UserIndex> users(n);
  for (std::size_t i = 0; i < n; ++i) users[i] = static_cast<UserIndex>(i);
  return users;
}

Corpus random_corpus(std::uint64_t seed, std::size_t users, std::size_t items,
                     std::size_t events) {
  Rng rng(seed);
  InteractionLog log;
  for (std::size_t k = 0; k < events; ++k) {
    log.records.push_back({"u" + std::to_string(rng.uniform_index(users)),
                           "i" + std::to_string(rng.uniform_index(items)),
                           static_cast<Timestamp>(rng.uniform_index(5000)), {}});
  }
  log.sort();
  PreprocessOptions opts;
  opts.min_user_degree = 1;
  opts.min_item_degree = 1;
  return build_corpus(preprocess(log, opts));
}

TEST(PartitionUsers, LargestRemainderSizes) {
  const auto p = partition_users(iota_users(10), 0.8, 0.1, 0.1, 7);
  EXPECT_EQ(p.train.size(), 8u);
  EXPECT_EQ(p.validation.size(), 1u);
  EXPECT_EQ(p.test.size(), 1u);

  const auto q = partition_users(iota_users(7), 0.5, 0.25, 0.25, 1);
  EXPECT_EQ(q.train.size() + q.validation.size() + q.test.size(), 7u);
  // 3.5 / 1.75 / 1.75: floors 3,1,1 and the two spare users go to the
  // larger remainders.
  EXPECT_EQ(q.train.size(), 3u);
  EXPECT_EQ(q.validation.size(), 2u);
  EXPECT_EQ(q.test.size(), 2u);
}

TEST(PartitionUsers, DeterministicDisjointComplete) {
  const auto a = partition_users(iota_users(50), 0.8, 0.1, 0.1, 7);
  const auto b = partition_users(iota_users(50), 0.8, 0.1, 0.1, 7);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.validation, b.validation);
  EXPECT_EQ(a.test, b.test);
  std::set<UserIndex> all(a.train.begin(), a.train.end());
  all.insert(a.validation.begin(), a.validation.end());
  all.insert(a.test.begin(), a.test.end());
  EXPECT_EQ(all.size(), 50u);

  const auto c = partition_users(iota_users(50), 0.8, 0.1, 0.1, 8);
  EXPECT_NE(a.train, c.train);
}

TEST(PartitionUsers, EmptyGroupIsError) {
  EXPECT_THROW(partition_users(iota_users(10), 1.0, 0.0, 0.0, 7), ContractError);
  EXPECT_THROW(partition_users(iota_users(10), 0.5, 0.2, 0.2, 7), ContractError);
}

TEST(HoldoutRandom, TwentyPercentOfTen) {
  const auto r = holdout_random({events_at(0, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10})}, 0.2, 3);
  ASSERT_EQ(r.users.size(), 1u);
  EXPECT_EQ(r.users[0].targets.size(), 2u);
  EXPECT_EQ(r.users[0].inputs.size(), 8u);
}

TEST(HoldoutRandom, SingleInteractionUserExcluded) {
  const auto r = holdout_random({events_at(4, {1})}, 0.2, 3);
  EXPECT_TRUE(r.users.empty());
  EXPECT_EQ(r.excluded.too_few, 1u);
  EXPECT_EQ(r.excluded.users, std::vector<UserIndex>{4});
}

TEST(HoldoutRandom, SeedReproducesTargets) {
  std::vector<UserEvents> users;
  for (UserIndex u = 0; u < 20; ++u) {
    users.push_back(events_at(u, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12}));
  }
  const auto a = holdout_random(users, 0.2, 11);
  const auto b = holdout_random(users, 0.2, 11);
  const auto c = holdout_random(users, 0.2, 12);
  bool any_difference = false;
  for (std::size_t k = 0; k < users.size(); ++k) {
    EXPECT_EQ(a.users[k].targets, b.users[k].targets);
    any_difference |= a.users[k].targets != c.users[k].targets;
  }
  EXPECT_TRUE(any_difference);
}

TEST(HoldoutCount, CeilingClampedToKeepAnInput) {
  EXPECT_EQ(holdout_count(10, 0.2), 2u);
  EXPECT_EQ(holdout_count(11, 0.2), 3u);
  EXPECT_EQ(holdout_count(30, 0.1), 3u);
  EXPECT_EQ(holdout_count(2, 0.9), 1u);
  EXPECT_THROW(holdout_count(10, 1.0), ContractError);
}

TEST(HoldoutProportional, LastTwentyPercent) {
  const auto r = holdout_proportional({events_at(0, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10})}, 0.2);
  ASSERT_EQ(r.users.size(), 1u);
  EXPECT_EQ(times_of(r.users[0].targets), (std::vector<Timestamp>{9, 10}));
}

TEST(HoldoutProportional, BoundaryTieBrokenByItem) {
  // Items 7 and 3 share the last timestamp; the larger index sorts last and
  // becomes the single target regardless of input order.
  UserEvents a{0, {{5, 1}, {7, 2}, {3, 2}}};
  UserEvents b{0, {{3, 2}, {5, 1}, {7, 2}}};
  const auto ra = holdout_proportional({a}, 0.3);
  const auto rb = holdout_proportional({b}, 0.3);
  ASSERT_EQ(ra.users[0].targets.size(), 1u);
  EXPECT_EQ(ra.users[0].targets[0].item, 7u);
  EXPECT_EQ(ra.users[0].targets, rb.users[0].targets);
  EXPECT_EQ(ra.users[0].inputs, rb.users[0].inputs);
}

TEST(HoldoutProportional, SingleInteractionUserExcluded) {
  const auto r = holdout_proportional({events_at(2, {5})}, 0.2);
  EXPECT_TRUE(r.users.empty());
  EXPECT_EQ(r.excluded.too_few, 1u);
}

TEST(HoldoutCutoff, SplitsAroundCutoff) {
  const auto r = holdout_cutoff({events_at(0, {1, 5, 9})}, 6);
  ASSERT_EQ(r.users.size(), 1u);
  EXPECT_EQ(times_of(r.users[0].inputs), (std::vector<Timestamp>{1, 5}));
  EXPECT_EQ(times_of(r.users[0].targets), (std::vector<Timestamp>{9}));
}

TEST(HoldoutCutoff, TalliesNoTargetAndNoInputSeparately) {
  const auto r = holdout_cutoff(
      {events_at(0, {1, 5, 9}), events_at(1, {1, 5}), events_at(2, {8, 9})}, 6);
  EXPECT_EQ(r.users.size(), 1u);
  EXPECT_EQ(r.excluded.no_target, 1u);
  EXPECT_EQ(r.excluded.no_input, 1u);
  EXPECT_EQ(r.excluded.users, (std::vector<UserIndex>{1, 2}));
}

TEST(HoldoutCutoff, BeyondCorpusEndIsError) {
  EXPECT_THROW(holdout_cutoff({events_at(0, {1, 5, 9})}, 100), EmptyCorpusError);
}

TEST(HoldoutCutoff, QuantileCutoffOverrepresentsBurstyUsers) {
  // User 0 is active at an even pace, user 1 concentrates activity at the end.
  std::vector<Timestamp> steady, bursty;
  for (Timestamp t = 0; t < 100; ++t) steady.push_back(t * 10);
  for (Timestamp t = 0; t < 20; ++t) bursty.push_back(t * 10);
  for (Timestamp t = 0; t < 30; ++t) bursty.push_back(950 + t);
  std::vector<Timestamp> all = steady;
  all.insert(all.end(), bursty.begin(), bursty.end());
  const Timestamp cutoff = cutoff_at_quantile(all, 0.9);
  // 150 interactions, 15 after the cutoff.
  std::size_t after = 0;
  for (const Timestamp t : all) after += t > cutoff;
  EXPECT_EQ(after, 15u);

  const auto r = holdout_cutoff({events_at(0, steady), events_at(1, bursty)}, cutoff);
  ASSERT_EQ(r.users.size(), 2u);
  const auto steady_targets = r.users[0].targets.size();
  const auto bursty_targets = r.users[1].targets.size();
  EXPECT_GT(bursty_targets, 2 * steady_targets);
  EXPECT_EQ(steady_targets + bursty_targets, 15u);
}

TEST(CutoffAtQuantile, FinalShareLiesAfterCutoff) {
  std::vector<Timestamp> times;
  for (Timestamp t = 1; t <= 100; ++t) times.push_back(t);
  EXPECT_EQ(cutoff_at_quantile(times, 0.9), 90);
  EXPECT_THROW(cutoff_at_quantile(times, 1.0), ContractError);
  EXPECT_THROW(cutoff_at_quantile({}, 0.5), EmptyCorpusError);
}

TEST(AssemblePhaseSets, DeploymentReadyHasNoTestSet) {
  const auto corpus = random_corpus(1, 60, 40, 1500);
  SplitParams params;
  params.phase = Phase::deployment_ready;
  params.protocol = Protocol::strict_cutoff;
  params.validation_user_fraction = 0.1;
  const auto sets = assemble_phase_sets(corpus, params);
  EXPECT_FALSE(sets.test.has_value());
  EXPECT_EQ(sets.validation.name, "val_cutoff");
  EXPECT_TRUE(checks::leakage(sets).empty());
}

TEST(AssemblePhaseSets, DevelopmentTraditionalUsesRandomValidationAndTemporalTest) {
  const auto corpus = random_corpus(2, 200, 60, 5000);
  SplitParams params;
  params.phase = Phase::development;
  params.protocol = Protocol::traditional;
  params.seed = 9;
  const auto sets = assemble_phase_sets(corpus, params);
  EXPECT_EQ(sets.validation_users.size(), 10u);  // 5% of 200
  EXPECT_EQ(sets.train_users.size(), 190u);
  EXPECT_EQ(sets.validation.name, "val_trad");
  ASSERT_TRUE(sets.test.has_value());
  EXPECT_EQ(sets.test->name, "test_temporal");
  ASSERT_TRUE(sets.test_cutoff.has_value());
  for (const auto& eu : sets.validation.users) {
    // 20% (rounded up) of the pre-cutoff history.
    EXPECT_EQ(eu.targets.size(),
              holdout_count(eu.inputs.size() + eu.targets.size(), 0.2));
  }
  for (const auto& eu : sets.test->users) {
    for (const auto& t : eu.targets) EXPECT_GT(t.timestamp, *sets.test_cutoff);
  }
  EXPECT_TRUE(checks::leakage(sets).empty()) << checks::leakage(sets);
}

TEST(AssemblePhaseSets, ProtocolsShareTrainMatrixAndValidationUsers) {
  const auto corpus = random_corpus(3, 150, 50, 4000);
  SplitParams params;
  params.seed = 21;
  std::vector<PhaseSets> all;
  for (const auto p : {Protocol::traditional, Protocol::proportional,
                       Protocol::strict_cutoff}) {
    params.protocol = p;
    all.push_back(assemble_phase_sets(corpus, params));
  }
  for (std::size_t k = 1; k < all.size(); ++k) {
    EXPECT_EQ(all[k].train, all[0].train);
    EXPECT_EQ(all[k].validation_users, all[0].validation_users);
  }
}

TEST(AssemblePhaseSets, ValidationTargetsNeverBecomeTestInputs) {
  const auto corpus = random_corpus(4, 120, 40, 3000);
  SplitParams params;
  params.protocol = Protocol::traditional;
  params.validation_user_fraction = 0.2;
  const auto sets = assemble_phase_sets(corpus, params);
  std::set<std::pair<UserIndex, ItemIndex>> val_targets;
  for (const auto& eu : sets.validation.users) {
    for (const auto& t : eu.targets) val_targets.insert({eu.user, t.item});
  }
  ASSERT_FALSE(val_targets.empty());
  for (const auto& eu : sets.test->users) {
    for (const auto& in : eu.inputs) {
      EXPECT_FALSE(val_targets.count({eu.user, in.item}));
    }
  }
}

TEST(AssemblePhaseSets, TraditionalTestDesignPartitionsUsers) {
  const auto corpus = random_corpus(5, 100, 40, 3000);
  SplitParams params;
  params.protocol = Protocol::traditional;
  params.test_design = TestDesign::traditional;
  const auto sets = assemble_phase_sets(corpus, params);
  EXPECT_EQ(sets.train_users.size(), 80u);
  EXPECT_EQ(sets.validation_users.size(), 10u);
  ASSERT_TRUE(sets.test.has_value());
  EXPECT_EQ(sets.test->name, "test_trad");
  EXPECT_TRUE(checks::leakage(sets).empty());
}

TEST(AssemblePhaseSets, DeterministicForFixedSeed) {
  const auto corpus = random_corpus(6, 80, 30, 2000);
  SplitParams params;
  params.protocol = Protocol::traditional;
  params.seed = 5;
  const auto a = assemble_phase_sets(corpus, params);
  const auto b = assemble_phase_sets(corpus, params);
  EXPECT_EQ(split_manifest(a.validation, params).dump(),
            split_manifest(b.validation, params).dump());
  EXPECT_EQ(split_manifest(*a.test, params).dump(),
            split_manifest(*b.test, params).dump());
}

TEST(SplitManifest, RecordsExclusionsAndUserLists) {
  const auto r = holdout_cutoff({events_at(0, {1, 5, 9}), events_at(1, {1, 2})}, 6);
  EvalSplit split;
  split.name = "val_cutoff";
  split.protocol = Protocol::strict_cutoff;
  split.users = r.users;
  split.excluded = r.excluded;
  split.cutoff_time = 6;
  const auto j = split_manifest(split, SplitParams{});
  EXPECT_EQ(j["protocol"], "cutoff");
  EXPECT_EQ(j["excluded"]["no_target"], 1);
  EXPECT_EQ(j["users"].size(), 1u);
  EXPECT_EQ(j["users"][0]["targets"], nlohmann::json::array({2}));
  EXPECT_EQ(j["cutoff_time"], 6);
}

}  // namespace
}  // namespace temporec
