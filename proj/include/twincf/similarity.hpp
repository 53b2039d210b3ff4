#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <mutex>
#include <ostream>
#include <thread>
#include <vector>

#include "twincf/rating_matrix.hpp"

namespace twincf {

inline constexpr double kDefaultTolerance = 1e-9;

struct SimilarityEntry {
  UserId other;
  double sim;  // cosine in [0,1]
  bool operator==(const SimilarityEntry&) const = default;
};

/// Total order over list entries: similarity descending, ties broken by
/// user id ascending. Deterministic, so equal stores compare entry-for-entry.
inline constexpr bool entry_order(const SimilarityEntry& a, const SimilarityEntry& b) {
  if (a.sim != b.sim) return a.sim > b.sim;
  return a.other < b.other;
}

/// A set of potential twin user ids, kept as a sorted unique vector.
struct CandidateSet {
  std::vector<UserId> members;  // ascending

  std::size_t size() const { return members.size(); }
  bool empty() const { return members.empty(); }
  bool contains(UserId u) const {
    return std::binary_search(members.begin(), members.end(), u);
  }
  void insert(UserId u) {
    auto it = std::lower_bound(members.begin(), members.end(), u);
    if (it == members.end() || *it != u) members.insert(it, u);
  }
  bool operator==(const CandidateSet&) const = default;
};

namespace detail {

// Sorted-descending run of entries whose similarity is within tol of target.
inline std::pair<const SimilarityEntry*, const SimilarityEntry*> equal_sim_range(
    const SimilarityEntry* first, const SimilarityEntry* last, double target, double tol) {
  const SimilarityEntry* lo = std::partition_point(
      first, last, [&](const SimilarityEntry& e) { return e.sim > target + tol; });
  const SimilarityEntry* hi = std::partition_point(
      lo, last, [&](const SimilarityEntry& e) { return e.sim >= target - tol; });
  return {lo, hi};
}

}  // namespace detail

/// One user's neighbours sorted by similarity.
///
/// Storage is two sorted arrays: the bulk list plus a small journal holding
/// entries inserted after the list was built. Point insertions land in the
/// journal, so the symmetric maintenance done on every user arrival costs
/// O(log n) per list instead of an O(n) shift; the journal folds into the
/// bulk array once it grows past a threshold. All reads see the merged view.
class SimilarityList {
 public:
  explicit SimilarityList(UserId owner) : owner_(owner) {}

  /// Adopts an already-sorted entry vector (strictly ordered, owner absent).
  static SimilarityList from_sorted(UserId owner, std::vector<SimilarityEntry> entries) {
    for (std::size_t k = 0; k < entries.size(); ++k) {
      if (entries[k].other == owner)
        throw std::invalid_argument("similarity list must not contain its owner");
      if (k > 0 && !entry_order(entries[k - 1], entries[k]))
        throw std::invalid_argument("similarity entries not strictly ordered");
    }
    SimilarityList l(owner);
    l.base_ = std::move(entries);
    return l;
  }

  /// Sorts and adopts arbitrary entries; duplicate ids rejected.
  SimilarityList(UserId owner, std::vector<SimilarityEntry> entries) : owner_(owner) {
    std::sort(entries.begin(), entries.end(), entry_order);
    std::vector<UserId> ids;
    ids.reserve(entries.size());
    for (const SimilarityEntry& e : entries) ids.push_back(e.other);
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
      throw std::invalid_argument("duplicate user id in similarity entries");
    if (std::binary_search(ids.begin(), ids.end(), owner))
      throw std::invalid_argument("similarity list must not contain its owner");
    base_ = std::move(entries);
  }

  UserId owner() const { return owner_; }
  std::size_t size() const { return base_.size() + journal_.size(); }
  bool empty() const { return base_.empty() && journal_.empty(); }

  bool contains(UserId u) const {
    auto match = [u](const SimilarityEntry& e) { return e.other == u; };
    return std::any_of(base_.begin(), base_.end(), match) ||
           std::any_of(journal_.begin(), journal_.end(), match);
  }

  /// Sorted insertion; rejects ids already present (linear scan).
  void insert(SimilarityEntry e) {
    if (e.other == owner_)
      throw std::invalid_argument("insert: entry would reference the list owner");
    if (contains(e.other))
      throw std::invalid_argument("insert: user " + std::to_string(e.other) +
                                  " already in similarity list");
    insert_unchecked(e);
  }

  /// Sorted insertion without the duplicate scan. The caller guarantees the
  /// id is absent (e.g. the store mirroring a freshly created user).
  void insert_unchecked(SimilarityEntry e) {
    auto it = std::lower_bound(journal_.begin(), journal_.end(), e, entry_order);
    journal_.insert(it, e);
    maybe_compact();
  }

  /// All user ids whose similarity is within tol of target, ascending.
  /// Binary search on both sorted arrays: O(log n + result).
  CandidateSet equal_range(double target, double tol) const {
    CandidateSet out;
    auto [b_lo, b_hi] =
        detail::equal_sim_range(base_.data(), base_.data() + base_.size(), target, tol);
    auto [j_lo, j_hi] = detail::equal_sim_range(journal_.data(),
                                                journal_.data() + journal_.size(), target, tol);
    out.members.reserve(static_cast<std::size_t>((b_hi - b_lo) + (j_hi - j_lo)));
    for (const SimilarityEntry* p = b_lo; p != b_hi; ++p) out.members.push_back(p->other);
    for (const SimilarityEntry* p = j_lo; p != j_hi; ++p) out.members.push_back(p->other);
    std::sort(out.members.begin(), out.members.end());
    return out;
  }

  /// Visits entries in (sim desc, id asc) order across both arrays.
  template <class F>
  void visit(F&& f) const {
    auto b = base_.begin();
    auto j = journal_.begin();
    while (b != base_.end() && j != journal_.end()) f(entry_order(*b, *j) ? *b++ : *j++);
    while (b != base_.end()) f(*b++);
    while (j != journal_.end()) f(*j++);
  }

  /// Materialised snapshot in list order.
  std::vector<SimilarityEntry> entries() const {
    std::vector<SimilarityEntry> out;
    out.reserve(size());
    visit([&out](const SimilarityEntry& e) { out.push_back(e); });
    return out;
  }

  std::size_t journal_size() const { return journal_.size(); }

 private:
  void maybe_compact() {
    if (journal_.size() < 16 || journal_.size() * 8 < base_.size()) return;
    std::vector<SimilarityEntry> merged;
    merged.reserve(base_.size() + journal_.size());
    std::merge(base_.begin(), base_.end(), journal_.begin(), journal_.end(),
               std::back_inserter(merged), entry_order);
    base_ = std::move(merged);
    journal_.clear();
  }

  UserId owner_;
  std::vector<SimilarityEntry> base_;
  std::vector<SimilarityEntry> journal_;
};

/// Every user's similarity list plus the float-equality tolerance used when
/// matching similarity values. Lists are dense: user u has a list iff
/// u < user_count().
class SimilarityStore {
 public:
  explicit SimilarityStore(double tolerance = kDefaultTolerance) : tolerance_(tolerance) {}

  double tolerance() const { return tolerance_; }
  std::size_t user_count() const { return lists_.size(); }
  bool has_list(UserId u) const { return u < lists_.size(); }

  const SimilarityList& list(UserId u) const {
    if (!has_list(u)) throw std::out_of_range("list: no similarity list for user");
    return lists_[u];
  }

  /// Owners arrive densely: the next list must belong to user_count().
  void add_list(SimilarityList l) {
    if (l.owner() != lists_.size())
      throw std::invalid_argument("add_list: owner does not extend the store densely");
    lists_.push_back(std::move(l));
  }

  /// Checked point insertion into one list.
  void insert_entry(UserId owner, SimilarityEntry e) {
    if (!has_list(owner)) throw std::out_of_range("insert_entry: unknown owner");
    lists_[owner].insert(e);
  }

  /// Symmetric maintenance for a user about to join the store: every existing
  /// list receives (new_user, sim) journal entries mirroring new_list, so
  /// later anchor probes can see the newcomer. new_list must cover exactly
  /// the current store users.
  void mirror_new_user(UserId new_user, const SimilarityList& new_list) {
    if (new_user != lists_.size())
      throw std::invalid_argument("mirror_new_user: user does not extend the store densely");
    if (new_list.size() != lists_.size())
      throw std::invalid_argument("mirror_new_user: list does not cover the store");
    new_list.visit([&](const SimilarityEntry& e) {
      lists_.at(e.other).insert_unchecked(SimilarityEntry{new_user, e.sim});
    });
  }

 private:
  std::vector<SimilarityList> lists_;
  double tolerance_ = kDefaultTolerance;
};

/// Cosine similarity over the full item space with missing-as-zero: the dot
/// product runs over co-rated items, norms over each whole row. Accumulation
/// is integral, so the result is independent of argument order and twins
/// compare exactly equal to 1.0.
inline double cosine(const RatingMatrix& m, UserId a, UserId b) {
  const RatingRow& ra = m.row(a);
  const RatingRow& rb = m.row(b);
  if (ra.empty() || rb.empty()) throw std::domain_error("cosine: zero-norm rating row");

  std::int64_t dot = 0, norm_a = 0, norm_b = 0;
  std::size_t i = 0, j = 0;
  while (i < ra.size() && j < rb.size()) {
    if (ra[i].item < rb[j].item) {
      norm_a += std::int64_t(ra[i].value) * ra[i].value;
      ++i;
    } else if (rb[j].item < ra[i].item) {
      norm_b += std::int64_t(rb[j].value) * rb[j].value;
      ++j;
    } else {
      dot += std::int64_t(ra[i].value) * rb[j].value;
      norm_a += std::int64_t(ra[i].value) * ra[i].value;
      norm_b += std::int64_t(rb[j].value) * rb[j].value;
      ++i;
      ++j;
    }
  }
  for (; i < ra.size(); ++i) norm_a += std::int64_t(ra[i].value) * ra[i].value;
  for (; j < rb.size(); ++j) norm_b += std::int64_t(rb[j].value) * rb[j].value;

  if (dot == 0) return 0.0;
  double s = static_cast<double>(dot) /
             std::sqrt(static_cast<double>(norm_a) * static_cast<double>(norm_b));
  return std::clamp(s, 0.0, 1.0);
}

namespace detail {

// Sorted entries for u over users [0, universe) \ {u}: one cosine per neighbour.
inline std::vector<SimilarityEntry> build_entries_over(const RatingMatrix& m,
                                                       std::size_t universe, UserId u) {
  std::vector<SimilarityEntry> entries;
  entries.reserve(universe);
  for (UserId v = 0; v < universe; ++v)
    if (v != u) entries.push_back(SimilarityEntry{v, cosine(m, u, v)});
  std::sort(entries.begin(), entries.end(), entry_order);
  return entries;
}

}  // namespace detail

/// Builds u's similarity list the traditional way: one cosine against every
/// user the store covers (excluding u itself), then a sort.
inline SimilarityList build_list_full(const RatingMatrix& m, const SimilarityStore& store,
                                      UserId u) {
  if (u >= m.user_count()) throw std::out_of_range("build_list_full: user id out of range");
  if (store.user_count() > m.user_count())
    throw std::invalid_argument("build_list_full: store covers users the matrix lacks");
  return SimilarityList::from_sorted(u, detail::build_entries_over(m, store.user_count(), u));
}

/// Bootstraps the whole store from scratch. Each list is an independent
/// function of the immutable matrix, so the work fans out across workers;
/// the result does not depend on the worker count.
inline SimilarityStore build_all(const RatingMatrix& m, double tolerance = kDefaultTolerance,
                                 unsigned workers = 0) {
  const std::size_t n = m.user_count();
  if (n < 2) throw std::invalid_argument("build_all: need at least 2 users");
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));

  std::vector<std::vector<SimilarityEntry>> slots(n);
  std::exception_ptr error;
  std::mutex error_mutex;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};

  auto work = [&]() {
    try {
      while (!failed.load(std::memory_order_relaxed)) {
        std::size_t u = next.fetch_add(1);
        if (u >= n) break;
        slots[u] = detail::build_entries_over(m, n, static_cast<UserId>(u));
      }
    } catch (...) {
      std::scoped_lock lock(error_mutex);
      if (!error) error = std::current_exception();
      failed.store(true, std::memory_order_relaxed);
    }
  };

  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);

  SimilarityStore store(tolerance);
  for (std::size_t u = 0; u < n; ++u)
    store.add_list(SimilarityList::from_sorted(static_cast<UserId>(u), std::move(slots[u])));
  return store;
}

namespace detail {

inline void write_sim_row(std::ostream& out, UserId owner, const SimilarityEntry& e) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", e.sim);
  out << owner << ',' << e.other << ',' << buf << '\n';
}

}  // namespace detail

/// Debug/oracle export: `owner,other,sim` with 17 significant digits.
inline void export_similarity_csv(const SimilarityList& l, std::ostream& out,
                                  bool header = true) {
  if (header) out << "owner,other,sim\n";
  l.visit([&](const SimilarityEntry& e) { detail::write_sim_row(out, l.owner(), e); });
}

inline void export_similarity_csv(const SimilarityStore& store, std::ostream& out) {
  out << "owner,other,sim\n";
  for (UserId u = 0; u < store.user_count(); ++u)
    export_similarity_csv(store.list(u), out, false);
}

}  // namespace twincf
