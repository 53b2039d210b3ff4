#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <string_view>

#include "twincf/similarity.hpp"

namespace twincf {

struct TwinSearchConfig {
  std::uint32_t anchor_count = 3;        // c: random users probed per search
  std::uint64_t seed = 0;                // anchor sampling seed
  double tolerance = kDefaultTolerance;  // similarity-equality epsilon
};

/// Observable cost of one user insertion, mirroring the terms of the
/// fast-path bound O(|Set_0|*m + c*(m + log n)).
struct OpCounters {
  std::uint64_t sims = 0;                // cosine computations
  std::uint64_t range_searches = 0;      // equal-value list searches
  std::size_t candidate_set_size = 0;    // |Set_0| after intersection
  std::uint64_t verifications = 0;       // exact rating-row comparisons
  bool fallback_taken = false;           // full rebuild executed

  bool operator==(const OpCounters&) const = default;
};

/// CSV row `phase,sims,range_searches,set0,verifications,fallback`.
inline void write_counters_csv(std::ostream& out, std::string_view phase, const OpCounters& c) {
  out << phase << ',' << c.sims << ',' << c.range_searches << ',' << c.candidate_set_size << ','
      << c.verifications << ',' << (c.fallback_taken ? 1 : 0) << '\n';
}

/// One anchor probe: compute sim(new_user, anchor) and collect every user in
/// the anchor's list whose stored similarity matches it. A twin of new_user
/// always matches, so it can never be filtered out here. When the anchor
/// itself is a twin (sim == 1), it has no entry in its own list and is added
/// explicitly.
inline CandidateSet probe_anchor(const RatingMatrix& m, const SimilarityStore& store,
                                 UserId new_user, UserId anchor, double tolerance) {
  if (anchor == new_user) throw std::invalid_argument("probe_anchor: anchor equals new user");
  if (!store.has_list(anchor)) throw std::out_of_range("probe_anchor: anchor has no list");
  const double sim = cosine(m, new_user, anchor);
  CandidateSet set = store.list(anchor).equal_range(sim, tolerance);
  if (std::abs(sim - 1.0) <= tolerance) set.insert(anchor);
  return set;
}

/// Exact intersection, probing from the smallest set so the cost is bounded
/// by c * min |set| (times a binary-search factor) rather than c * n.
inline CandidateSet intersect(std::span<const CandidateSet> sets) {
  if (sets.empty()) throw std::invalid_argument("intersect: need at least one set");
  std::size_t smallest = 0;
  for (std::size_t k = 1; k < sets.size(); ++k)
    if (sets[k].size() < sets[smallest].size()) smallest = k;

  CandidateSet out;
  out.members.reserve(sets[smallest].size());
  for (UserId u : sets[smallest].members) {
    bool everywhere = true;
    for (std::size_t k = 0; k < sets.size(); ++k) {
      if (k == smallest) continue;
      if (!sets[k].contains(u)) {
        everywhere = false;
        break;
      }
    }
    if (everywhere) out.members.push_back(u);
  }
  return out;
}

/// Integer rating rows compare exactly, so a candidate that merely slipped
/// through the tolerance-widened similarity filter is always rejected.
inline bool verify_twin(const RatingMatrix& m, UserId new_user, UserId candidate) {
  return row_equal(m, new_user, candidate);
}

/// The O(n) copy that replaces the O(n*m) rebuild: target's list becomes the
/// twin's list with any entry for target dropped and (twin, 1.0) put at its
/// sorted position. No similarities are computed.
inline SimilarityList copy_list(const SimilarityStore& store, UserId twin, UserId target) {
  if (!store.has_list(twin)) throw std::out_of_range("copy_list: twin has no list");
  if (store.has_list(target)) throw std::invalid_argument("copy_list: target already has a list");

  std::vector<SimilarityEntry> entries;
  entries.reserve(store.list(twin).size() + 1);
  store.list(twin).visit([&](const SimilarityEntry& e) {
    if (e.other != target) entries.push_back(e);
  });
  const SimilarityEntry self{twin, 1.0};
  entries.insert(std::lower_bound(entries.begin(), entries.end(), self, entry_order), self);
  return SimilarityList::from_sorted(target, std::move(entries));
}

struct TwinSearchResult {
  std::optional<SimilarityList> list;  // empty when no twin verified
  OpCounters counters;

  bool found() const { return list.has_value(); }
};

namespace detail {

// c distinct existing users, drawn by rejection from a seeded engine.
inline std::vector<UserId> sample_anchors(std::size_t universe, std::uint32_t count,
                                          std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<UserId> anchors;
  anchors.reserve(count);
  while (anchors.size() < count) {
    UserId pick = static_cast<UserId>(rng() % universe);
    if (std::find(anchors.begin(), anchors.end(), pick) == anchors.end())
      anchors.push_back(pick);
  }
  return anchors;
}

}  // namespace detail

/// Finds a twin of new_user among the store's users and copies its list.
///
/// Pipeline: sample c anchors, probe each for users with matching similarity,
/// intersect the candidate sets, then verify candidates in ascending id order
/// by exact rating comparison; the first verified twin's list is copied.
/// new_user must be the one matrix user the store does not cover yet.
inline TwinSearchResult twin_search(const RatingMatrix& m, const SimilarityStore& store,
                                    UserId new_user, const TwinSearchConfig& config) {
  const std::size_t n = m.user_count();
  if (new_user != store.user_count() || store.user_count() + 1 != n)
    throw std::invalid_argument("twin_search: store must cover exactly the other users");
  if (config.anchor_count < 1) throw std::invalid_argument("twin_search: anchor count must be >= 1");
  if (config.anchor_count > n - 1)
    throw std::invalid_argument("twin_search: anchor count exceeds existing users");

  TwinSearchResult result;
  const std::vector<UserId> anchors =
      detail::sample_anchors(store.user_count(), config.anchor_count, config.seed);

  std::vector<CandidateSet> per_anchor;
  per_anchor.reserve(anchors.size());
  for (UserId anchor : anchors) {
    per_anchor.push_back(probe_anchor(m, store, new_user, anchor, config.tolerance));
    ++result.counters.sims;
    ++result.counters.range_searches;
  }

  CandidateSet candidates = intersect(per_anchor);
  result.counters.candidate_set_size = candidates.size();

  for (UserId candidate : candidates.members) {
    ++result.counters.verifications;
    if (verify_twin(m, new_user, candidate)) {
      result.list = copy_list(store, candidate, new_user);
      break;
    }
  }
  return result;
}

struct AddUserResult {
  UserId user;
  OpCounters counters;
};

namespace detail {

// Shared tail of both insertion paths: mirror the newcomer into every
// existing list, then adopt its own list.
inline void commit_new_user(SimilarityStore& store, UserId user, SimilarityList list) {
  store.mirror_new_user(user, list);
  store.add_list(std::move(list));
}

}  // namespace detail

/// Adds a user and builds its similarity list via twin_search, falling back
/// to the traditional full build when no twin verifies. Either way the store
/// is left covering the new user symmetrically.
inline AddUserResult add_user_fast(RatingMatrix& m, SimilarityStore& store, RatingRow ratings,
                                   const TwinSearchConfig& config) {
  const UserId user = m.add_user(std::move(ratings));
  TwinSearchResult search = twin_search(m, store, user, config);
  SimilarityList list = search.found()
                            ? std::move(*search.list)
                            : build_list_full(m, store, user);
  if (!search.found()) {
    search.counters.fallback_taken = true;
    search.counters.sims += list.size();  // one cosine per existing user
  }
  detail::commit_new_user(store, user, std::move(list));
  return AddUserResult{user, search.counters};
}

/// The traditional path: always a full build, no probing. Used as the
/// baseline in benchmarks and as the oracle in store-equivalence tests.
inline AddUserResult add_user_baseline(RatingMatrix& m, SimilarityStore& store,
                                       RatingRow ratings) {
  const UserId user = m.add_user(std::move(ratings));
  SimilarityList list = build_list_full(m, store, user);
  OpCounters counters;
  counters.sims = list.size();
  counters.fallback_taken = true;
  detail::commit_new_user(store, user, std::move(list));
  return AddUserResult{user, counters};
}

}  // namespace twincf
