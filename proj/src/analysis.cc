#include "frame/analysis.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>

#include <json.hpp>

#include "frame/error.h"

namespace frame {
namespace {

double metric_value(const ScoredSample& s, SplitMetric metric) {
  return metric == SplitMetric::kPpl ? s.ppl_strong : s.pd;
}

}  // namespace

DistributionReport distribution_stats(std::string group_key, std::span<const double> values,
                                      SplitMetric metric, std::size_t bin_count) {
  if (values.empty()) {
    throw Error(ErrorCode::kEmptyGroup, "group '" + group_key + "' has no samples");
  }
  if (bin_count == 0) throw Error(ErrorCode::kDomain, "histogram needs at least one bin");

  DistributionReport report;
  report.group_key = std::move(group_key);
  report.metric = metric;
  report.sample_count = values.size();
  report.min = values.front();
  report.max = values.front();

  // Welford's update keeps the variance stable for large, tightly clustered groups.
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t n = 0;
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kNonFiniteInput,
                  "non-finite " + std::string(split_metric_name(metric)) + " in group '" +
                      report.group_key + "'");
    }
    ++n;
    const double delta = v - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (v - mean);
    report.min = std::min(report.min, v);
    report.max = std::max(report.max, v);
  }
  report.mean = mean;
  report.variance = n > 1 ? m2 / static_cast<double>(n - 1) : 0.0;

  const double span = report.max - report.min;
  report.bin_width = span / static_cast<double>(bin_count);
  report.histogram.resize(bin_count);
  for (std::size_t b = 0; b < bin_count; ++b) {
    report.histogram[b].lower_edge = report.min + report.bin_width * static_cast<double>(b);
  }
  for (double v : values) {
    std::size_t bin = 0;
    if (span > 0.0) {
      bin = static_cast<std::size_t>((v - report.min) / span * static_cast<double>(bin_count));
      bin = std::min(bin, bin_count - 1);
    }
    ++report.histogram[bin].count;
  }
  return report;
}

std::vector<DistributionReport> distribution_by_domain(std::span<const ScoredSample> scored,
                                                       SplitMetric metric, std::size_t bin_count) {
  std::map<std::string, std::vector<double>> groups;
  for (const auto& s : scored) {
    groups[s.domain.value_or(std::string(kNoDomain))].push_back(metric_value(s, metric));
  }
  std::vector<DistributionReport> reports;
  for (auto& [key, values] : groups) {
    reports.push_back(distribution_stats(key, values, metric, bin_count));
  }
  return reports;
}

std::vector<DistributionReport> distribution_by_quadrant(std::span<const ScoredSample> scored,
                                                         const QuadrantPartition& partition,
                                                         SplitMetric metric, std::size_t bin_count) {
  std::array<std::vector<double>, 4> groups;
  for (const auto& s : scored) {
    auto q = partition.label_of(s.id);
    if (!q) throw Error(ErrorCode::kUnknownId, "sample '" + s.id + "' has no quadrant label");
    groups[quadrant_index(*q)].push_back(metric_value(s, metric));
  }
  std::vector<DistributionReport> reports;
  for (std::size_t q = 0; q < 4; ++q) {
    if (groups[q].empty()) continue;
    reports.push_back(distribution_stats(std::string(quadrant_name(static_cast<Quadrant>(q))),
                                         groups[q], metric, bin_count));
  }
  return reports;
}

std::string serialize_distribution_reports(std::span<const DistributionReport> reports,
                                           std::string_view grouping) {
  std::string out;
  for (const auto& r : reports) {
    nlohmann::json bins = nlohmann::json::array();
    for (const auto& b : r.histogram) bins.push_back({b.lower_edge, b.count});
    nlohmann::json j = {{"kind", "distribution_report"},
                        {"grouping", grouping},
                        {"group_key", r.group_key},
                        {"metric", split_metric_name(r.metric)},
                        {"sample_count", r.sample_count},
                        {"mean", r.mean},
                        {"variance", r.variance},
                        {"min", r.min},
                        {"max", r.max},
                        {"bin_width", r.bin_width},
                        {"histogram", std::move(bins)}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace frame
