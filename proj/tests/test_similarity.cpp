#include "twincf/similarity.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "testutil.hpp"

using namespace twincf;
using testutil::make_matrix;
using testutil::make_row;

TEST(Cosine, IdenticalRowsGiveExactlyOne) {
  RatingMatrix m = make_matrix(6, {make_row({{0, 4}, {2, 2}, {5, 1}})});
  m.add_user(m.row(0));
  EXPECT_EQ(cosine(m, 0, 1), 1.0);
}

TEST(Cosine, DisjointRowsGiveZero) {
  RatingMatrix m = make_matrix(4, {make_row({{0, 5}, {1, 5}}), make_row({{2, 3}, {3, 1}})});
  EXPECT_EQ(cosine(m, 0, 1), 0.0);
}

TEST(Cosine, HandComputedValue) {
  // a = {i1:4, i2:2}, b = {i1:2, i2:4}: dot 16, norms sqrt(20) each -> 0.8.
  RatingMatrix m = make_matrix(2, {make_row({{0, 4}, {1, 2}}), make_row({{0, 2}, {1, 4}})});
  EXPECT_DOUBLE_EQ(cosine(m, 0, 1), 0.8);
}

TEST(Cosine, SymmetricAndBoundedOnRandomPairs) {
  RatingMatrix m = generate_synthetic(40, 30, 0.3, 17);
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    UserId a = rng() % 40, b = rng() % 40;
    double s = cosine(m, a, b);
    EXPECT_EQ(s, cosine(m, b, a));  // bitwise symmetric
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 1.0);
  }
}

TEST(Cosine, MatchesDenseOracle) {
  RatingMatrix m = generate_synthetic(25, 50, 0.2, 23);
  for (UserId a = 0; a < 25; ++a)
    for (UserId b = 0; b < 25; ++b)
      EXPECT_NEAR(cosine(m, a, b), oracle::dense_cosine(m, a, b), 1e-12);
}

TEST(Cosine, ZeroNormRowSignalled) {
  // An item nobody rated turns into an empty row under transpose.
  RatingMatrix m = make_matrix(3, {make_row({{0, 4}}), make_row({{0, 2}, {2, 1}})});
  RatingMatrix t = transpose(m);  // item index 1 has no raters
  EXPECT_THROW(cosine(t, 0, 1), std::domain_error);
}

TEST(BuildListFull, TwoUserStoreHasOneEntry) {
  RatingMatrix m = make_matrix(3, {make_row({{0, 5}}), make_row({{0, 3}, {1, 1}})});
  SimilarityStore store = build_all(m);
  SimilarityList l = build_list_full(m, store, 0);
  ASSERT_EQ(l.size(), 1u);
  EXPECT_EQ(l.entries()[0].other, 1u);
}

TEST(BuildListFull, FourUserHandMatrix) {
  RatingMatrix m = make_matrix(3, {
                                      make_row({{0, 5}, {1, 3}}),  // u0
                                      make_row({{0, 4}}),          // u1
                                      make_row({{1, 2}, {2, 1}}),  // u2
                                      make_row({{0, 5}, {1, 3}}),  // u3, twin of u0
                                  });
  SimilarityStore store = build_all(m);
  auto entries = build_list_full(m, store, 0).entries();
  ASSERT_EQ(entries.size(), 3u);
  EXPECT_EQ(entries[0].other, 3u);
  EXPECT_DOUBLE_EQ(entries[0].sim, 1.0);
  EXPECT_EQ(entries[1].other, 1u);
  EXPECT_DOUBLE_EQ(entries[1].sim, 5.0 / std::sqrt(34.0));
  EXPECT_EQ(entries[2].other, 2u);
  EXPECT_DOUBLE_EQ(entries[2].sim, 6.0 / std::sqrt(170.0));
}

TEST(BuildListFull, DuplicateUserSortsItsTwinFirst) {
  RatingMatrix m = generate_synthetic(12, 25, 0.3, 31);
  m.add_user(m.row(4));
  SimilarityStore store = build_all(m);
  auto entries = build_list_full(m, store, 12).entries();
  EXPECT_EQ(entries[0].other, 4u);
  EXPECT_DOUBLE_EQ(entries[0].sim, 1.0);
}

TEST(BuildListFull, MatchesBruteForceOracle) {
  for (std::uint64_t seed : {7, 8, 9}) {
    RatingMatrix m = generate_synthetic(20, 15, 0.4, seed);
    SimilarityStore store = build_all(m);
    for (UserId u = 0; u < 20; ++u) {
      auto got = build_list_full(m, store, u).entries();
      auto want = oracle::brute_force_list(m, 20, u);
      ASSERT_EQ(got.size(), want.size());
      for (std::size_t k = 0; k < want.size(); ++k) {
        EXPECT_EQ(got[k].other, want[k].other) << "seed " << seed << " user " << u;
        EXPECT_NEAR(got[k].sim, want[k].sim, 1e-12);
      }
    }
  }
}

TEST(BuildAll, TwoUsersMirrorEachOther) {
  RatingMatrix m = make_matrix(3, {make_row({{0, 5}, {1, 2}}), make_row({{0, 1}, {2, 4}})});
  SimilarityStore store = build_all(m);
  ASSERT_EQ(store.user_count(), 2u);
  ASSERT_EQ(store.list(0).size(), 1u);
  ASSERT_EQ(store.list(1).size(), 1u);
  EXPECT_EQ(store.list(0).entries()[0].sim, store.list(1).entries()[0].sim);
}

TEST(BuildAll, FiveUsersCarryEveryPairTwice) {
  RatingMatrix m = generate_synthetic(5, 12, 0.5, 77);
  SimilarityStore store = build_all(m);
  for (UserId a = 0; a < 5; ++a)
    for (UserId b = 0; b < 5; ++b) {
      if (a == b) continue;
      double from_a = 0, from_b = 0;
      for (const auto& e : store.list(a).entries())
        if (e.other == b) from_a = e.sim;
      for (const auto& e : store.list(b).entries())
        if (e.other == a) from_b = e.sim;
      EXPECT_EQ(from_a, from_b);
      EXPECT_EQ(from_a, cosine(m, a, b));
    }
}

TEST(BuildAll, IndependentOfWorkerCount) {
  RatingMatrix m = generate_synthetic(30, 20, 0.3, 13);
  SimilarityStore s1 = build_all(m, kDefaultTolerance, 1);
  SimilarityStore s3 = build_all(m, kDefaultTolerance, 3);
  SimilarityStore s8 = build_all(m, kDefaultTolerance, 8);
  ASSERT_EQ(s1.user_count(), s3.user_count());
  for (UserId u = 0; u < s1.user_count(); ++u) {
    EXPECT_EQ(s1.list(u).entries(), s3.list(u).entries());
    EXPECT_EQ(s1.list(u).entries(), s8.list(u).entries());
  }
}

TEST(BuildAll, NeedsTwoUsers) {
  RatingMatrix m = make_matrix(2, {make_row({{0, 1}})});
  EXPECT_THROW(build_all(m), std::invalid_argument);
}

TEST(BuildAll, ZeroNormRowPropagates) {
  RatingMatrix m = make_matrix(3, {make_row({{0, 4}}), make_row({{0, 2}, {2, 1}})});
  RatingMatrix t = transpose(m);
  EXPECT_THROW(build_all(t), std::domain_error);
  EXPECT_THROW(build_all(t, kDefaultTolerance, 4), std::domain_error);
}

TEST(BuildAll, StorePassesFullAudit) {
  RatingMatrix m = generate_synthetic(25, 18, 0.35, 41);
  SimilarityStore store = build_all(m);
  EXPECT_EQ(testutil::audit_store(store), "");
}

namespace {

SimilarityList hand_list() {
  return SimilarityList(9, {{5, 0.9}, {3, 0.7}, {7, 0.7}, {2, 0.4}});
}

}  // namespace

TEST(EqualRange, FindsTiedValues) {
  CandidateSet set = hand_list().equal_range(0.7, kDefaultTolerance);
  EXPECT_EQ(set.members, (std::vector<UserId>{3, 7}));
}

TEST(EqualRange, AbsentValueGivesEmptySet) {
  EXPECT_TRUE(hand_list().equal_range(0.5, kDefaultTolerance).empty());
}

TEST(EqualRange, SingleMatch) {
  CandidateSet set = hand_list().equal_range(0.9, kDefaultTolerance);
  EXPECT_EQ(set.members, (std::vector<UserId>{5}));
}

TEST(EqualRange, MatchesLinearScanOnRandomLists) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 120; ++trial) {
    const std::size_t len = 1 + rng() % 60;
    std::vector<SimilarityEntry> entries;
    for (std::size_t k = 0; k < len; ++k)
      entries.push_back({static_cast<UserId>(k), (rng() % 8) / 8.0});
    SimilarityList list(100, entries);
    // Probe stored values, near-misses, and arbitrary points.
    std::vector<double> targets{0.0, 1.0, (rng() % 100) / 100.0};
    targets.push_back(entries[rng() % len].sim);
    targets.push_back(entries[rng() % len].sim + 0.5e-9);
    targets.push_back(entries[rng() % len].sim + 1e-6);
    auto sorted = list.entries();
    for (double t : targets) {
      auto got = list.equal_range(t, kDefaultTolerance).members;
      auto want = oracle::linear_equal_range(sorted, t, kDefaultTolerance);
      EXPECT_EQ(got, want) << "trial " << trial << " target " << t;
    }
  }
}

TEST(InsertEntry, IntoEmptyList) {
  SimilarityStore store;
  store.add_list(SimilarityList(0));
  store.insert_entry(0, {4, 0.25});
  ASSERT_EQ(store.list(0).size(), 1u);
  EXPECT_EQ(store.list(0).entries()[0].other, 4u);
}

TEST(InsertEntry, TieBrokenByIdAscending) {
  SimilarityList list(9, {{5, 0.7}, {1, 0.3}});
  list.insert({3, 0.7});
  auto entries = list.entries();
  ASSERT_EQ(entries.size(), 3u);
  EXPECT_EQ(entries[0].other, 3u);
  EXPECT_EQ(entries[1].other, 5u);
  EXPECT_EQ(entries[2].other, 1u);
}

TEST(InsertEntry, DuplicateIdRejected) {
  SimilarityStore store;
  store.add_list(SimilarityList(0));
  store.insert_entry(0, {4, 0.25});
  EXPECT_THROW(store.insert_entry(0, {4, 0.75}), std::invalid_argument);
  EXPECT_THROW(store.insert_entry(0, {0, 0.5}), std::invalid_argument);  // owner itself
  EXPECT_THROW(store.insert_entry(3, {1, 0.5}), std::out_of_range);      // no such list
  EXPECT_EQ(store.list(0).size(), 1u);
}

TEST(InsertEntry, HundredRandomInsertsEqualSortOracle) {
  std::mt19937_64 rng(5150);
  SimilarityList list(1000);
  std::vector<SimilarityEntry> reference;
  for (UserId id = 0; id < 100; ++id) {
    SimilarityEntry e{id, (rng() % 32) / 32.0};
    list.insert(e);
    reference.push_back(e);
  }
  std::sort(reference.begin(), reference.end(), entry_order);
  EXPECT_EQ(list.entries(), reference);
  // The journal must have folded at least once along the way.
  EXPECT_LT(list.journal_size(), 100u);
}

TEST(InsertEntry, SortedAfterEverySequence) {
  std::mt19937_64 rng(31337);
  for (int trial = 0; trial < 100; ++trial) {
    SimilarityList list(999);
    const int inserts = 1 + rng() % 50;
    for (int k = 0; k < inserts; ++k)
      list.insert({static_cast<UserId>(k), (rng() % 16) / 16.0});
    auto entries = list.entries();
    ASSERT_EQ(entries.size(), static_cast<std::size_t>(inserts));
    for (std::size_t k = 1; k < entries.size(); ++k)
      EXPECT_TRUE(entry_order(entries[k - 1], entries[k]));
  }
}

TEST(SimilarityList, RejectsMalformedConstruction) {
  EXPECT_THROW(SimilarityList(1, {{1, 0.5}}), std::invalid_argument);            // owner inside
  EXPECT_THROW(SimilarityList(9, {{2, 0.5}, {2, 0.7}}), std::invalid_argument);  // dup id
  EXPECT_THROW(SimilarityList::from_sorted(9, {{2, 0.5}, {3, 0.7}}), std::invalid_argument);
}

TEST(ExportCsv, SeventeenSignificantDigits) {
  SimilarityList list(2, {{1, 1.0 / 3.0}});
  std::ostringstream out;
  export_similarity_csv(list, out);
  EXPECT_EQ(out.str(), "owner,other,sim\n2,1,0.33333333333333331\n");
}

TEST(ExportCsv, StoreExportCoversAllLists) {
  RatingMatrix m = generate_synthetic(4, 10, 0.5, 3);
  SimilarityStore store = build_all(m);
  std::ostringstream out;
  export_similarity_csv(store, out);
  std::size_t lines = 0;
  for (char c : out.str())
    if (c == '\n') ++lines;
  EXPECT_EQ(lines, 1u + 4u * 3u);
}
