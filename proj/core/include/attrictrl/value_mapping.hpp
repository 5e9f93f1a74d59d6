#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "attrictrl/metrics.hpp"

namespace attrictrl {

// Equal-width bins over [lo, hi]; index = floor((x - lo) / width) with
// x == hi placed in the last bin.
struct BinAssignment {
  std::size_t bin_count = 10;
  double lo = 0.0;
  double hi = 1.0;
  std::vector<std::size_t> assignments;

  double width() const noexcept { return (hi - lo) / static_cast<double>(bin_count); }
  // Bin of an arbitrary value under this assignment's edges, clamped to the
  // valid index range.
  std::size_t bin_of(double x) const noexcept;
  std::vector<std::size_t> counts() const;
};

// Throws DegenerateDistributionError for fewer than two values or max == min.
BinAssignment assign_bins(std::span<const double> values, std::size_t bin_count = 10);

struct Record {
  std::string id;
  double raw = 0.0;

  friend bool operator==(const Record&, const Record&) = default;
};

// Exactly per_bin records per bin: a uniform subset without replacement when
// the bin has at least per_bin records, uniform draws with replacement
// otherwise. Output is grouped by bin in ascending order. Throws
// UnbalanceableBinError naming the first empty bin.
std::vector<Record> balance(std::span<const Record> records, const BinAssignment& bins,
                            std::size_t per_bin, std::uint64_t seed);

// Average 1-based ranks; tied values share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

// Spearman rank correlation with tie correction (Pearson on average ranks).
// Returns 0 when either side is constant.
double spearman(std::span<const double> a, std::span<const double> b);

struct MappingEntry {
  double raw = 0.0;
  double normalized = 0.0;

  friend bool operator==(const MappingEntry&, const MappingEntry&) = default;
};

// (rank - 0.5) / n with mean ranks for ties, sorted ascending by raw.
std::vector<MappingEntry> rank_normalize(std::span<const double> values);

struct MappingTable {
  AttributeKind kind = AttributeKind::Brightness;
  std::vector<MappingEntry> entries;  // ascending by raw
  std::size_t bin_count = 10;
  std::size_t per_bin = 0;
  double lo = 0.0;
  double hi = 0.0;
  std::string source_manifest_hash;

  std::size_t n() const noexcept { return entries.size(); }
};

MappingTable build_mapping_table(AttributeKind kind, std::span<const double> balanced_values);

// Normalized value of the entry nearest to raw; an exact distance tie goes to
// the smaller normalized value. Out-of-range queries clamp to the extremes.
// Throws ContractError on an empty table.
double to_normalized(const MappingTable& table, double raw);

inline constexpr int kMappingFormatVersion = 1;

nlohmann::json to_json(const MappingTable& table);
MappingTable mapping_table_from_json(const nlohmann::json& j);

}  // namespace attrictrl
