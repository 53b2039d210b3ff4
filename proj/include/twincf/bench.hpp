#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "twincf/dataset_io.hpp"
#include "twincf/distribution.hpp"
#include "twincf/twin_search.hpp"

namespace twincf {

/// Logical store equality: same users, same lists entry-for-entry.
inline bool stores_equal(const SimilarityStore& a, const SimilarityStore& b) {
  if (a.user_count() != b.user_count()) return false;
  for (UserId u = 0; u < a.user_count(); ++u) {
    if (a.list(u).owner() != b.list(u).owner()) return false;
    if (a.list(u).entries() != b.list(u).entries()) return false;
  }
  return true;
}

/// Same matrix minus one user row; the item universe and every external id
/// are preserved.
inline RatingMatrix matrix_without_user(const RatingMatrix& m, UserId skip) {
  if (skip >= m.user_count())
    throw std::out_of_range("matrix_without_user: user id out of range");
  RatingMatrix out;
  for (ItemId i = 0; i < m.item_count(); ++i) out.intern_item(m.item_external(i));
  for (UserId u = 0; u < m.user_count(); ++u)
    if (u != skip) out.add_user(m.row(u), m.user_external(u));
  return out;
}

/// Where benchmark and analysis input comes from. The synthetic fields are
/// ignored for file-backed formats.
struct DatasetSpec {
  std::string path;
  DatasetSource format = DatasetSource::csv;
  std::size_t users = 200;
  std::size_t items = 100;
  double density = 0.1;
  std::uint64_t seed = 42;
};

inline LoadedDataset load_dataset(const DatasetSpec& spec) {
  if (spec.format == DatasetSource::synthetic) {
    RatingMatrix m = generate_synthetic(spec.users, spec.items, spec.density, spec.seed);
    DatasetMeta meta = describe(m, "synthetic", DatasetSource::synthetic);
    return LoadedDataset{std::move(m), std::move(meta)};
  }
  std::ifstream in(spec.path);
  if (!in) throw std::runtime_error("cannot open dataset: " + spec.path);
  if (spec.format == DatasetSource::movielens) return parse_movielens(in, spec.path);
  // CSV: accept an optional canonical header by peeking at the first line.
  std::string first;
  std::getline(in, first);
  bool has_header = detail::trim_cr(first) == kCsvHeader;
  in.seekg(0);
  return parse_csv(in, has_header, spec.path);
}

struct BenchConfig {
  DatasetSpec data;
  enum class Mode { user, item } mode = Mode::user;
  std::uint32_t twins = 30;        // k: duplicate users injected
  std::uint32_t anchors = 3;       // c: anchors per twin search
  std::uint64_t seed = 0;
  double tolerance = kDefaultTolerance;
  std::uint32_t repetitions = 5;   // timings per measurement; median reported
};

struct BenchRow {
  std::string method;  // "twinsearch" or "baseline"
  std::uint32_t twin_index = 0;
  std::int64_t wall_time_ns = 0;
  OpCounters counters;
};

struct BenchResult {
  DatasetMeta meta;                   // after any transpose
  ExternalId template_user = 0;      // external id of the withheld source row
  std::size_t initial_store_users = 0;
  std::vector<BenchRow> rows;        // 2 rows per twin, twinsearch first
  std::int64_t twinsearch_total_ns = 0;
  std::int64_t baseline_total_ns = 0;
};

/// The in-run correctness check tripped: the fast-path store no longer
/// matches the baseline store. Reported as a bug, never as a timing result.
class StoreDivergenceError : public std::runtime_error {
 public:
  explicit StoreDivergenceError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline std::int64_t now_ns() {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

// Times op on throwaway copies of the arm state, advancing the arm with the
// final repetition's outcome. Copies stay outside the timed window.
template <class Op>
std::int64_t timed_median(std::uint32_t reps, RatingMatrix& matrix, SimilarityStore& store,
                          Op&& op, OpCounters& counters_out) {
  std::vector<std::int64_t> times;
  times.reserve(reps);
  for (std::uint32_t r = 0; r < reps; ++r) {
    RatingMatrix m = matrix;
    SimilarityStore s = store;
    const std::int64_t t0 = now_ns();
    OpCounters counters = op(m, s);
    const std::int64_t t1 = now_ns();
    times.push_back(t1 - t0);
    if (r + 1 == reps) {
      matrix = std::move(m);
      store = std::move(s);
      counters_out = counters;
    }
  }
  std::sort(times.begin(), times.end());
  return times[times.size() / 2];
}

inline void require_nonempty_rows(const RatingMatrix& m) {
  for (UserId u = 0; u < m.user_count(); ++u)
    if (m.row(u).empty())
      throw std::domain_error(
          "dataset has rows with no ratings in this mode; similarity is undefined for them");
}

}  // namespace detail

/// Injects k identical users and times the twin fast path against the
/// traditional full rebuild, twin by twin, on two stores that must stay
/// identical throughout.
///
/// The duplicated rating vector is the row of a seeded-random user, and that
/// source user is withheld from the benchmarked matrix: the first twin then
/// genuinely arrives unseen (full-build cost), and twins 2..k exercise the
/// copy path. Both arms perform the same symmetric store maintenance, so the
/// measured difference is list construction.
inline BenchResult run_bench(const BenchConfig& config) {
  if (config.twins < 1) throw std::invalid_argument("run_bench: need at least one twin");
  if (config.repetitions < 1) throw std::invalid_argument("run_bench: need at least one repetition");

  LoadedDataset ds = load_dataset(config.data);
  RatingMatrix matrix = config.mode == BenchConfig::Mode::item ? transpose(ds.matrix)
                                                               : std::move(ds.matrix);
  detail::require_nonempty_rows(matrix);
  const std::size_t n = matrix.user_count();
  if (n < 3) throw std::invalid_argument("run_bench: dataset too small");

  BenchResult result;
  result.meta = describe(matrix, ds.meta.name, ds.meta.source);

  std::mt19937_64 rng(config.seed);
  const UserId source = static_cast<UserId>(rng() % n);
  const RatingRow template_row = matrix.row(source);
  result.template_user = matrix.user_external(source);

  RatingMatrix bench_matrix = matrix_without_user(matrix, source);
  SimilarityStore store = build_all(bench_matrix, config.tolerance);
  result.initial_store_users = store.user_count();

  RatingMatrix matrix_fast = bench_matrix;
  SimilarityStore store_fast = store;
  RatingMatrix matrix_base = std::move(bench_matrix);
  SimilarityStore store_base = std::move(store);

  for (std::uint32_t j = 1; j <= config.twins; ++j) {
    const TwinSearchConfig search{config.anchors, config.seed + j, config.tolerance};

    OpCounters fast_counters;
    const std::int64_t fast_ns = detail::timed_median(
        config.repetitions, matrix_fast, store_fast,
        [&](RatingMatrix& m, SimilarityStore& s) {
          return add_user_fast(m, s, template_row, search).counters;
        },
        fast_counters);
    result.rows.push_back(BenchRow{"twinsearch", j, fast_ns, fast_counters});
    result.twinsearch_total_ns += fast_ns;

    OpCounters base_counters;
    const std::int64_t base_ns = detail::timed_median(
        config.repetitions, matrix_base, store_base,
        [&](RatingMatrix& m, SimilarityStore& s) {
          return add_user_baseline(m, s, template_row).counters;
        },
        base_counters);
    result.rows.push_back(BenchRow{"baseline", j, base_ns, base_counters});
    result.baseline_total_ns += base_ns;

    if (!(matrix_fast == matrix_base) || !stores_equal(store_fast, store_base))
      throw StoreDivergenceError("fast-path and baseline stores diverged after twin " +
                                 std::to_string(j));
  }
  return result;
}

/// `method,twin_index,wall_time_ns,sims,range_searches,set0,verifications,fallback`
inline void write_bench_csv(const BenchResult& result, std::ostream& out) {
  out << "method,twin_index,wall_time_ns,sims,range_searches,set0,verifications,fallback\n";
  for (const BenchRow& row : result.rows) {
    const OpCounters& c = row.counters;
    out << row.method << ',' << row.twin_index << ',' << row.wall_time_ns << ',' << c.sims << ','
        << c.range_searches << ',' << c.candidate_set_size << ',' << c.verifications << ','
        << (c.fallback_taken ? 1 : 0) << '\n';
  }
}

struct VerifyConfig {
  std::uint32_t trials = 200;
  std::uint64_t seed = 0;
  std::uint32_t anchors = 3;
  double tolerance = kDefaultTolerance;
};

struct VerifyFailure {
  std::uint64_t seed = 0;
  std::string reason;
};

struct VerifyReport {
  std::uint32_t trials = 0;
  std::vector<VerifyFailure> failures;
  bool vacuous() const { return trials == 0; }
  bool passed() const { return failures.empty(); }
};

/// Fault-injection hook for harness self-tests: applied to the fast-path
/// list before comparison, simulating a buggy copy.
using ListFault = std::function<void(std::vector<SimilarityEntry>&)>;

/// Randomised oracle-equivalence suite: on seeded instances with one injected
/// twin, the fast-path list must match the traditional full build entry for
/// entry, and the whole store must match the baseline store.
inline VerifyReport run_verify(const VerifyConfig& config, const ListFault& fault = {}) {
  VerifyReport report;
  report.trials = config.trials;
  for (std::uint32_t trial = 0; trial < config.trials; ++trial) {
    const std::uint64_t seed = config.seed + trial;
    std::mt19937_64 rng(seed);
    const std::size_t n = 50 + rng() % 451;
    const std::size_t items = 20 + rng() % 181;
    const double density = 0.05 + static_cast<double>(rng() % 1000) / 999.0 * 0.15;
    const RatingMatrix matrix = generate_synthetic(n, items, density, rng());
    const UserId source = static_cast<UserId>(rng() % n);

    auto fail = [&](std::string reason) {
      report.failures.push_back(VerifyFailure{seed, std::move(reason)});
    };

    const SimilarityStore store = build_all(matrix, config.tolerance);

    RatingMatrix matrix_fast = matrix;
    SimilarityStore store_fast = store;
    const AddUserResult fast = add_user_fast(matrix_fast, store_fast, matrix.row(source),
                                             TwinSearchConfig{config.anchors, seed,
                                                              config.tolerance});
    if (fast.counters.fallback_taken) {
      fail("fallback taken although a twin exists");
      continue;
    }

    std::vector<SimilarityEntry> got = store_fast.list(fast.user).entries();
    if (fault) fault(got);
    const std::vector<SimilarityEntry> want =
        build_list_full(matrix_fast, store_fast, fast.user).entries();
    if (got.size() != want.size()) {
      fail("list length mismatch");
      continue;
    }
    bool mismatch = false;
    for (std::size_t k = 0; k < want.size(); ++k) {
      if (got[k].other != want[k].other ||
          std::abs(got[k].sim - want[k].sim) > config.tolerance) {
        fail("list mismatch at position " + std::to_string(k));
        mismatch = true;
        break;
      }
    }
    if (mismatch) continue;

    RatingMatrix matrix_base = matrix;
    SimilarityStore store_base = store;
    add_user_baseline(matrix_base, store_base, matrix.row(source));
    if (!stores_equal(store_fast, store_base)) fail("store divergence against baseline path");
  }
  return report;
}

struct AnalyzeConfig {
  DatasetSpec data;
  std::uint32_t x = 10;       // buckets partitioning [0, 1]
  std::uint32_t seeds = 50;   // twin injections sampled for |Set_0|
  std::uint32_t anchors = 3;
  std::uint64_t seed = 0;
  double tolerance = kDefaultTolerance;
};

struct AnalyzeUserRow {
  ExternalId user = 0;
  double mu = 0.0;
  double sigma = 0.0;
  std::uint32_t x = 0;
  double bucket_max_fraction = 0.0;
  double eq3_fraction = 0.0;  // NaN when the list is too short or constant
};

struct AnalyzeReport {
  std::vector<AnalyzeUserRow> users;
  std::vector<std::pair<std::uint64_t, std::size_t>> set0_samples;  // (seed, |Set_0|)
  double median_set0 = 0.0;
  double bound = 0.0;  // n / 125
  double ratio = 0.0;  // median / bound
};

/// Per-user distribution report plus the measured candidate-set sizes for
/// repeated seeded twin injections; the true twin keeps every sample >= 1.
inline AnalyzeReport run_analyze(const AnalyzeConfig& config) {
  LoadedDataset ds = load_dataset(config.data);
  const RatingMatrix& matrix = ds.matrix;
  const std::size_t n = matrix.user_count();
  const SimilarityStore store = build_all(matrix, config.tolerance);

  AnalyzeReport report;
  report.users.reserve(n);
  for (UserId u = 0; u < n; ++u) {
    const SimilarityList& list = store.list(u);
    AnalyzeUserRow row;
    row.user = matrix.user_external(u);
    row.x = config.x;
    try {
      SublistReport bucket = largest_bucket(list, config.x);
      row.mu = bucket.model.mu;
      row.sigma = bucket.model.sigma;
      row.bucket_max_fraction = bucket.empirical_fraction;
      row.eq3_fraction = bucket.fraction;
    } catch (const std::exception&) {
      // Short or constant lists have no usable Gaussian fit.
      double sum = 0.0;
      list.visit([&](const SimilarityEntry& e) { sum += e.sim; });
      row.mu = list.empty() ? 0.0 : sum / static_cast<double>(list.size());
      row.sigma = 0.0;
      const std::vector<std::size_t> counts = count_buckets(list, config.x);
      const std::size_t best = *std::max_element(counts.begin(), counts.end());
      row.bucket_max_fraction =
          list.empty() ? 0.0 : static_cast<double>(best) / static_cast<double>(list.size());
      row.eq3_fraction = std::numeric_limits<double>::quiet_NaN();
    }
    report.users.push_back(row);
  }

  for (std::uint32_t s = 0; s < config.seeds; ++s) {
    const std::uint64_t seed = config.seed + s;
    std::mt19937_64 rng(seed);
    const UserId source = static_cast<UserId>(rng() % n);
    RatingMatrix scratch = matrix;
    const UserId injected = scratch.add_user(matrix.row(source));
    const TwinSearchResult r =
        twin_search(scratch, store, injected, TwinSearchConfig{config.anchors, seed,
                                                               config.tolerance});
    report.set0_samples.emplace_back(seed, r.counters.candidate_set_size);
  }

  if (!report.set0_samples.empty()) {
    std::vector<std::size_t> sizes;
    sizes.reserve(report.set0_samples.size());
    for (const auto& [seed, size] : report.set0_samples) sizes.push_back(size);
    std::sort(sizes.begin(), sizes.end());
    const std::size_t mid = sizes.size() / 2;
    report.median_set0 = sizes.size() % 2 == 1
                             ? static_cast<double>(sizes[mid])
                             : (static_cast<double>(sizes[mid - 1]) +
                                static_cast<double>(sizes[mid])) /
                                   2.0;
  }
  report.bound = static_cast<double>(n) / 125.0;
  report.ratio = report.bound > 0.0 ? report.median_set0 / report.bound : 0.0;
  return report;
}

/// `user,mu,sigma,x,bucket_max_fraction,eq3_fraction`
inline void write_analyze_csv(const AnalyzeReport& report, std::ostream& out) {
  out << "user,mu,sigma,x,bucket_max_fraction,eq3_fraction\n";
  char buf[160];
  for (const AnalyzeUserRow& row : report.users) {
    std::snprintf(buf, sizeof(buf), "%lld,%.17g,%.17g,%u,%.17g,%.17g",
                  static_cast<long long>(row.user), row.mu, row.sigma, row.x,
                  row.bucket_max_fraction, row.eq3_fraction);
    out << buf << '\n';
  }
}

/// `sample,seed,set0`
inline void write_set0_csv(const AnalyzeReport& report, std::ostream& out) {
  out << "sample,seed,set0\n";
  for (std::size_t k = 0; k < report.set0_samples.size(); ++k)
    out << k << ',' << report.set0_samples[k].first << ',' << report.set0_samples[k].second
        << '\n';
}

}  // namespace twincf
