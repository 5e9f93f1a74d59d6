#include "attrictrl/value_mapping.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "attrictrl/error.hpp"
#include "attrictrl/rng.hpp"

namespace attrictrl {

std::size_t BinAssignment::bin_of(double x) const noexcept {
  if (!(x > lo)) return 0;
  if (x >= hi) return bin_count - 1;
  const auto index = static_cast<std::size_t>(std::floor((x - lo) / width()));
  return std::min(index, bin_count - 1);
}

std::vector<std::size_t> BinAssignment::counts() const {
  std::vector<std::size_t> c(bin_count, 0);
  for (std::size_t b : assignments) ++c[b];
  return c;
}

BinAssignment assign_bins(std::span<const double> values, std::size_t bin_count) {
  if (bin_count == 0) throw ContractError("bin_count must be positive");
  if (values.size() < 2) {
    throw DegenerateDistributionError("at least two values are required to define bins");
  }
  const auto [min_it, max_it] = std::minmax_element(values.begin(), values.end());
  if (!(*max_it > *min_it)) {
    throw DegenerateDistributionError("all values are equal; bin width is undefined");
  }
  BinAssignment out;
  out.bin_count = bin_count;
  out.lo = *min_it;
  out.hi = *max_it;
  out.assignments.reserve(values.size());
  for (double v : values) out.assignments.push_back(out.bin_of(v));
  return out;
}

std::vector<Record> balance(std::span<const Record> records, const BinAssignment& bins,
                            std::size_t per_bin, std::uint64_t seed) {
  if (records.size() != bins.assignments.size()) {
    throw ContractError("record count does not match bin assignment count");
  }
  if (per_bin == 0) throw ContractError("per_bin must be positive");

  std::vector<std::vector<std::size_t>> members(bins.bin_count);
  for (std::size_t i = 0; i < records.size(); ++i) members[bins.assignments[i]].push_back(i);
  for (std::size_t b = 0; b < bins.bin_count; ++b) {
    if (members[b].empty()) throw UnbalanceableBinError(b);
  }

  Rng rng = Rng::stream(seed, "balance");
  std::vector<Record> out;
  out.reserve(per_bin * bins.bin_count);
  for (std::vector<std::size_t>& bin : members) {
    if (bin.size() >= per_bin) {
      // Partial Fisher-Yates: the first per_bin slots become a uniform subset.
      for (std::size_t i = 0; i < per_bin; ++i) {
        std::swap(bin[i], bin[i + rng.below(bin.size() - i)]);
        out.push_back(records[bin[i]]);
      }
    } else {
      for (std::size_t i = 0; i < per_bin; ++i) out.push_back(records[bin[rng.below(bin.size())]]);
    }
  }
  return out;
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    // Positions i..j (0-based) share rank mean of (i+1)..(j+1).
    const double mean_rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mean_rank;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ContractError("spearman: length mismatch");
  if (a.size() < 2) throw ContractError("spearman: need at least two pairs");
  const std::vector<double> ra = average_ranks(a);
  const std::vector<double> rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    cov += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (va == 0.0 || vb == 0.0) return 0.0;
  return cov / std::sqrt(va * vb);
}

std::vector<MappingEntry> rank_normalize(std::span<const double> values) {
  if (values.empty()) throw ContractError("rank_normalize: empty input");
  const std::vector<double> ranks = average_ranks(values);
  const double n = static_cast<double>(values.size());
  std::vector<MappingEntry> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = {values[i], (ranks[i] - 0.5) / n};
  std::stable_sort(out.begin(), out.end(),
                   [](const MappingEntry& a, const MappingEntry& b) { return a.raw < b.raw; });
  return out;
}

MappingTable build_mapping_table(AttributeKind kind, std::span<const double> balanced_values) {
  MappingTable table;
  table.kind = kind;
  table.entries = rank_normalize(balanced_values);
  return table;
}

double to_normalized(const MappingTable& table, double raw) {
  const auto& e = table.entries;
  if (e.empty()) throw ContractError("to_normalized: empty mapping table");
  const auto it = std::lower_bound(e.begin(), e.end(), raw,
                                   [](const MappingEntry& m, double v) { return m.raw < v; });
  if (it == e.begin()) return e.front().normalized;
  if (it == e.end()) return e.back().normalized;
  const MappingEntry& above = *it;
  const MappingEntry& below = *(it - 1);
  const double d_above = above.raw - raw;
  const double d_below = raw - below.raw;
  if (d_below < d_above) return below.normalized;
  if (d_above < d_below) return above.normalized;
  return std::min(below.normalized, above.normalized);
}

nlohmann::json to_json(const MappingTable& table) {
  nlohmann::json entries = nlohmann::json::array();
  for (const MappingEntry& m : table.entries) entries.push_back({m.raw, m.normalized});
  return {
      {"format_version", kMappingFormatVersion},
      {"attribute", std::string(to_string(table.kind))},
      {"n", table.n()},
      {"bins", {{"bin_count", table.bin_count}, {"per_bin", table.per_bin}, {"lo", table.lo}, {"hi", table.hi}}},
      {"source_manifest_hash", table.source_manifest_hash},
      {"entries", std::move(entries)},
  };
}

MappingTable mapping_table_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format_version").get<int>() != kMappingFormatVersion) {
      throw ConfigError("unsupported mapping table format_version " + j.at("format_version").dump());
    }
    MappingTable t;
    t.kind = parse_attribute(j.at("attribute").get<std::string>());
    const auto& bins = j.at("bins");
    t.bin_count = bins.at("bin_count").get<std::size_t>();
    t.per_bin = bins.at("per_bin").get<std::size_t>();
    t.lo = bins.at("lo").get<double>();
    t.hi = bins.at("hi").get<double>();
    t.source_manifest_hash = j.value("source_manifest_hash", "");
    for (const auto& pair : j.at("entries")) {
      t.entries.push_back({pair.at(0).get<double>(), pair.at(1).get<double>()});
    }
    if (t.entries.size() != j.at("n").get<std::size_t>()) throw ConfigError("mapping table entry count mismatch");
    if (!std::is_sorted(t.entries.begin(), t.entries.end(),
                        [](const MappingEntry& a, const MappingEntry& b) { return a.raw < b.raw; })) {
      throw ConfigError("mapping table entries are not sorted by raw value");
    }
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed mapping table: ") + e.what());
  }
}

}  // namespace attrictrl
