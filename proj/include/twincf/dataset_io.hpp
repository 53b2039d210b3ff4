#pragma once

#include <charconv>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "twincf/rating_matrix.hpp"

namespace twincf {

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct LoadedDataset {
  RatingMatrix matrix;
  DatasetMeta meta;
};

namespace detail {

inline std::string_view trim_cr(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == '\n')) s.remove_suffix(1);
  return s;
}

inline std::int64_t parse_int(std::string_view field, std::size_t line, const char* what) {
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size())
    throw ParseError(line, std::string("malformed ") + what + " field '" + std::string(field) + "'");
  return value;
}

inline std::vector<std::string_view> split(std::string_view s, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = s.find(delim, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

struct RawRecord {
  ExternalId user;
  ExternalId item;
  std::int64_t rating;
  std::size_t line;
};

inline LoadedDataset assemble(const std::vector<RawRecord>& records, std::string name,
                              DatasetSource source) {
  RatingMatrix m;
  // Intern in first-appearance order so two formats carrying the same record
  // sequence produce structurally identical matrices.
  std::vector<std::vector<std::pair<RatingEntry, std::size_t>>> rows;
  std::unordered_map<ExternalId, UserId> users;
  for (const RawRecord& r : records) {
    if (r.rating < kMinRating || r.rating > kMaxRating)
      throw ParseError(r.line, "rating " + std::to_string(r.rating) + " outside [1,5]");
    ItemId item = m.intern_item(r.item);
    auto [it, inserted] = users.emplace(r.user, static_cast<UserId>(rows.size()));
    if (inserted) rows.emplace_back();
    rows[it->second].push_back(
        {RatingEntry{item, static_cast<Rating>(r.rating)}, r.line});
  }
  std::vector<ExternalId> user_ext(rows.size());
  for (const auto& [ext, id] : users) user_ext[id] = ext;

  for (std::size_t u = 0; u < rows.size(); ++u) {
    auto& entries = rows[u];
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) { return a.first.item < b.first.item; });
    RatingRow row;
    row.reserve(entries.size());
    for (std::size_t k = 0; k < entries.size(); ++k) {
      if (k > 0 && entries[k - 1].first.item == entries[k].first.item)
        throw ParseError(entries[k].second,
                         "duplicate (user,item) pair for user " + std::to_string(user_ext[u]));
      row.push_back(entries[k].first);
    }
    m.add_user(std::move(row), user_ext[u]);
  }
  DatasetMeta meta = describe(m, std::move(name), source);
  return LoadedDataset{std::move(m), std::move(meta)};
}

}  // namespace detail

/// Parses the MovieLens u.data format: `user<TAB>item<TAB>rating<TAB>timestamp`
/// per line, 1-based external ids, timestamp ignored. Empty lines are skipped;
/// anything else malformed is an error carrying its line number.
inline LoadedDataset parse_movielens(std::istream& in, std::string name = "movielens") {
  std::vector<detail::RawRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view s = detail::trim_cr(line);
    if (s.empty()) continue;
    auto fields = detail::split(s, '\t');
    if (fields.size() < 4)
      throw ParseError(line_no, "expected at least 4 tab-separated fields, got " +
                                    std::to_string(fields.size()));
    records.push_back({detail::parse_int(fields[0], line_no, "user"),
                       detail::parse_int(fields[1], line_no, "item"),
                       detail::parse_int(fields[2], line_no, "rating"), line_no});
  }
  return detail::assemble(records, std::move(name), DatasetSource::movielens);
}

inline constexpr std::string_view kCsvHeader = "user,item,rating";

/// Parses `user,item,rating` lines; when has_header is set the first
/// non-empty line must be exactly the canonical header.
inline LoadedDataset parse_csv(std::istream& in, bool has_header, std::string name = "csv") {
  std::vector<detail::RawRecord> records;
  std::string line;
  std::size_t line_no = 0;
  bool header_pending = has_header;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view s = detail::trim_cr(line);
    if (s.empty()) continue;
    if (header_pending) {
      if (s != kCsvHeader)
        throw ParseError(line_no, "expected header '" + std::string(kCsvHeader) + "'");
      header_pending = false;
      continue;
    }
    auto fields = detail::split(s, ',');
    if (fields.size() != 3)
      throw ParseError(line_no,
                       "expected 3 comma-separated fields, got " + std::to_string(fields.size()));
    records.push_back({detail::parse_int(fields[0], line_no, "user"),
                       detail::parse_int(fields[1], line_no, "item"),
                       detail::parse_int(fields[2], line_no, "rating"), line_no});
  }
  return detail::assemble(records, std::move(name), DatasetSource::csv);
}

/// Canonical CSV: header line, then one `user,item,rating` record per rating,
/// sorted by (external user id, external item id).
inline void serialize_csv(const RatingMatrix& m, std::ostream& out) {
  std::vector<std::tuple<ExternalId, ExternalId, Rating>> triples;
  triples.reserve(m.rating_count());
  for (UserId u = 0; u < m.user_count(); ++u)
    for (const RatingEntry& e : m.row(u))
      triples.emplace_back(m.user_external(u), m.item_external(e.item), e.value);
  std::sort(triples.begin(), triples.end());
  out << kCsvHeader << '\n';
  for (const auto& [user, item, rating] : triples)
    out << user << ',' << item << ',' << static_cast<int>(rating) << '\n';
}

inline std::string serialize_csv(const RatingMatrix& m) {
  std::ostringstream out;
  serialize_csv(m, out);
  return out.str();
}

}  // namespace twincf
