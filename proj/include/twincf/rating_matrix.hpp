#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace twincf {

using UserId = std::uint32_t;
using ItemId = std::uint32_t;
using Rating = std::uint8_t;     // integral stars, 1..5
using ExternalId = std::int64_t; // id as it appears in the source data

inline constexpr Rating kMinRating = 1;
inline constexpr Rating kMaxRating = 5;

struct RatingEntry {
  ItemId item;
  Rating value;
  bool operator==(const RatingEntry&) const = default;
};

/// One user's ratings, sorted by item index, one entry per item.
using RatingRow = std::vector<RatingEntry>;

/// Sparse user-item rating store with append-only user rows.
///
/// Users and items are addressed by dense indices internally; the external
/// ids from the source data are kept in bijective id maps. The item universe
/// is fixed by whoever loads the data: rows may only reference items that
/// have already been interned.
class RatingMatrix {
 public:
  RatingMatrix() = default;

  /// Registers an item id and returns its dense index (existing or new).
  ItemId intern_item(ExternalId ext) {
    auto it = item_index_.find(ext);
    if (it != item_index_.end()) return it->second;
    ItemId id = static_cast<ItemId>(item_ext_.size());
    item_ext_.push_back(ext);
    item_index_.emplace(ext, id);
    return id;
  }

  /// Appends a user row under the next free external id.
  UserId add_user(RatingRow row) { return add_user(std::move(row), next_user_ext_); }

  /// Appends a user row; rejects empty rows, unsorted/duplicate items,
  /// out-of-range ratings or item indices, and reused external ids.
  UserId add_user(RatingRow row, ExternalId ext) {
    validate_row(row);
    if (user_index_.contains(ext))
      throw std::invalid_argument("add_user: external user id already present: " +
                                  std::to_string(ext));
    UserId id = static_cast<UserId>(rows_.size());
    rating_count_ += row.size();
    rows_.push_back(std::move(row));
    user_ext_.push_back(ext);
    user_index_.emplace(ext, id);
    if (ext >= next_user_ext_) next_user_ext_ = ext + 1;
    return id;
  }

  std::size_t user_count() const { return rows_.size(); }
  std::size_t item_count() const { return item_ext_.size(); }
  std::size_t rating_count() const { return rating_count_; }

  const RatingRow& row(UserId u) const {
    if (u >= rows_.size()) throw std::out_of_range("row: user id out of range");
    return rows_[u];
  }

  ExternalId user_external(UserId u) const {
    if (u >= user_ext_.size()) throw std::out_of_range("user_external: id out of range");
    return user_ext_[u];
  }
  ExternalId item_external(ItemId i) const {
    if (i >= item_ext_.size()) throw std::out_of_range("item_external: id out of range");
    return item_ext_[i];
  }

  std::optional<UserId> find_user(ExternalId ext) const {
    auto it = user_index_.find(ext);
    if (it == user_index_.end()) return std::nullopt;
    return it->second;
  }
  std::optional<ItemId> find_item(ExternalId ext) const {
    auto it = item_index_.find(ext);
    if (it == item_index_.end()) return std::nullopt;
    return it->second;
  }

  /// Rating for a (user, item) pair in dense indices; nullopt when unrated.
  std::optional<Rating> rating(UserId u, ItemId i) const {
    const RatingRow& r = row(u);
    auto it = std::lower_bound(r.begin(), r.end(), i,
                               [](const RatingEntry& e, ItemId x) { return e.item < x; });
    if (it == r.end() || it->item != i) return std::nullopt;
    return it->value;
  }

  bool operator==(const RatingMatrix&) const = default;

 private:
  friend RatingMatrix transpose(const RatingMatrix&);

  // Transpose may produce users with no ratings (items nobody rated); rows
  // arrive sorted and validated by construction.
  UserId add_row_unchecked(RatingRow row, ExternalId ext) {
    UserId id = static_cast<UserId>(rows_.size());
    rating_count_ += row.size();
    rows_.push_back(std::move(row));
    user_ext_.push_back(ext);
    user_index_.emplace(ext, id);
    if (ext >= next_user_ext_) next_user_ext_ = ext + 1;
    return id;
  }

  void validate_row(const RatingRow& row) const {
    if (row.empty()) throw std::invalid_argument("add_user: empty rating vector");
    for (std::size_t k = 0; k < row.size(); ++k) {
      const RatingEntry& e = row[k];
      if (e.item >= item_ext_.size())
        throw std::out_of_range("add_user: item index out of range");
      if (e.value < kMinRating || e.value > kMaxRating)
        throw std::out_of_range("add_user: rating outside [1,5]");
      if (k > 0 && row[k - 1].item >= e.item)
        throw std::invalid_argument("add_user: items not strictly increasing");
    }
  }

  std::vector<RatingRow> rows_;
  std::vector<ExternalId> user_ext_;
  std::vector<ExternalId> item_ext_;
  std::unordered_map<ExternalId, UserId> user_index_;
  std::unordered_map<ExternalId, ItemId> item_index_;
  std::size_t rating_count_ = 0;
  ExternalId next_user_ext_ = 1;
};

enum class DatasetSource { movielens, csv, synthetic };

struct DatasetMeta {
  std::string name;
  std::size_t users = 0;
  std::size_t items = 0;
  std::size_t ratings = 0;
  DatasetSource source = DatasetSource::csv;
};

inline DatasetMeta describe(const RatingMatrix& m, std::string name, DatasetSource source) {
  return DatasetMeta{std::move(name), m.user_count(), m.item_count(), m.rating_count(), source};
}

/// True iff both users rated exactly the same items with the same stars.
/// Cost is bounded by the row lengths; rows of different length compare
/// unequal without touching their entries.
inline bool row_equal(const RatingMatrix& m, UserId a, UserId b) {
  return m.row(a) == m.row(b);
}

/// Swaps the roles of users and items; external ids move with them.
/// transpose(transpose(x)) == x.
inline RatingMatrix transpose(const RatingMatrix& m) {
  RatingMatrix out;
  for (UserId u = 0; u < m.user_count(); ++u) out.intern_item(m.user_external(u));

  std::vector<RatingRow> rows(m.item_count());
  std::vector<std::size_t> counts(m.item_count(), 0);
  for (UserId u = 0; u < m.user_count(); ++u)
    for (const RatingEntry& e : m.row(u)) ++counts[e.item];
  for (ItemId i = 0; i < m.item_count(); ++i) rows[i].reserve(counts[i]);
  // Ascending u within ascending item walk keeps every transposed row sorted.
  for (UserId u = 0; u < m.user_count(); ++u)
    for (const RatingEntry& e : m.row(u))
      rows[e.item].push_back(RatingEntry{static_cast<ItemId>(u), e.value});

  // An item nobody rated becomes a user with no ratings; representable here,
  // rejected later by the similarity engine (zero norm).
  for (ItemId i = 0; i < m.item_count(); ++i)
    out.add_row_unchecked(std::move(rows[i]), m.item_external(i));
  return out;
}

/// Deterministic random matrix: every user rates round(density*m) distinct
/// items, stars uniform in 1..5. External ids are 1-based on both axes.
inline RatingMatrix generate_synthetic(std::size_t users, std::size_t items, double density,
                                       std::uint64_t seed) {
  if (users < 1 || items < 1) throw std::invalid_argument("generate_synthetic: empty shape");
  if (!(density > 0.0) || density > 1.0)
    throw std::invalid_argument("generate_synthetic: density out of (0,1]");
  const std::size_t per_user = static_cast<std::size_t>(density * static_cast<double>(items) + 0.5);
  if (per_user == 0)
    throw std::invalid_argument("generate_synthetic: density rounds to zero ratings per user");

  RatingMatrix m;
  for (std::size_t i = 0; i < items; ++i) m.intern_item(static_cast<ExternalId>(i + 1));

  // Hand-rolled xorshift-based generator so results are pinned across
  // standard-library implementations.
  std::uint64_t state = seed * 6364136223846793005ULL + 1442695040888963407ULL;
  auto next = [&state]() {
    state ^= state << 13;
    state ^= state >> 7;
    state ^= state << 17;
    return state;
  };

  RatingRow row;
  for (std::size_t u = 0; u < users; ++u) {
    row.clear();
    row.reserve(per_user);
    std::size_t taken = 0;
    for (std::size_t i = 0; i < items && taken < per_user; ++i) {
      // Selection sampling: pick each item with probability (need/left).
      std::uint64_t left = items - i;
      std::uint64_t need = per_user - taken;
      if (next() % left < need) {
        row.push_back(RatingEntry{static_cast<ItemId>(i),
                                  static_cast<Rating>(1 + next() % 5)});
        ++taken;
      }
    }
    m.add_user(row, static_cast<ExternalId>(u + 1));
  }
  return m;
}

}  // namespace twincf
