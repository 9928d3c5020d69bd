#include "frame/spectral.h"

#include <fftw3.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>

#include <json.hpp>

#include "frame/corpus.h"
#include "frame/error.h"

namespace frame {
namespace {

using nlohmann::json;

// Planner calls in FFTW share global state; execution does not.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
  text = trim(text);
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

json report_json(const SmoothnessEntry& entry) {
  const SpectralReport& r = entry.report;
  return {{"kind", "spectral_report"},
          {"rank", entry.rank},
          {"name", r.name},
          {"length", r.length},
          {"cutoff_fraction", r.cutoff_fraction},
          {"high_freq_ratio", r.high_freq_ratio},
          {"psd", r.psd}};
}

}  // namespace

std::vector<double> power_spectral_density(std::span<const double> curve) {
  const std::size_t n = curve.size();
  if (n < 2) {
    throw Error(ErrorCode::kInsufficientSamples,
                "power spectral density needs at least 2 points, got " + std::to_string(n));
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(curve[i])) {
      throw Error(ErrorCode::kNonFiniteInput,
                  "loss curve value at index " + std::to_string(i) + " is not finite");
    }
  }
  const std::size_t bins = n / 2 + 1;
  std::unique_ptr<double, FftwFree> in(static_cast<double*>(fftw_malloc(sizeof(double) * n)));
  std::unique_ptr<fftw_complex, FftwFree> out(
      static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * bins)));
  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.get(), out.get(), FFTW_ESTIMATE);
  }
  std::copy(curve.begin(), curve.end(), in.get());
  fftw_execute(plan);
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }

  std::vector<double> psd(bins);
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t k = 0; k < bins; ++k) {
    const double re = out.get()[k][0];
    const double im = out.get()[k][1];
    psd[k] = (re * re + im * im) * scale;
  }
  return psd;
}

double high_freq_ratio(std::span<const double> psd, double cutoff_fraction,
                       std::size_t curve_length) {
  if (!(cutoff_fraction > 0.0 && cutoff_fraction < 1.0)) {
    throw Error(ErrorCode::kDomain, "cutoff fraction must lie in (0, 1), got " +
                                        std::to_string(cutoff_fraction));
  }
  if (psd.empty() || curve_length < 2 || curve_length / 2 + 1 != psd.size()) {
    throw Error(ErrorCode::kDomain, "spectrum of " + std::to_string(psd.size()) +
                                        " bins does not match a curve of length " +
                                        std::to_string(curve_length));
  }
  double total = 0.0;
  double high = 0.0;
  for (std::size_t k = 0; k < psd.size(); ++k) {
    total += psd[k];
    const double fraction = 2.0 * static_cast<double>(k) / static_cast<double>(curve_length);
    if (fraction > cutoff_fraction) high += psd[k];
  }
  if (total <= 0.0) {
    throw Error(ErrorCode::kZeroSpectrum, "spectrum carries no energy; high-frequency ratio is undefined");
  }
  return high / total;
}

SpectralReport spectral_report(const LossCurve& curve, double cutoff_fraction) {
  SpectralReport report;
  report.name = curve.name;
  report.length = curve.values.size();
  report.cutoff_fraction = cutoff_fraction;
  report.psd = power_spectral_density(curve.values);
  report.high_freq_ratio = high_freq_ratio(report.psd, cutoff_fraction, report.length);
  return report;
}

std::vector<SmoothnessEntry> compare_smoothness(std::span<const LossCurve> curves,
                                                double cutoff_fraction) {
  if (curves.empty()) {
    throw Error(ErrorCode::kInsufficientSamples, "no loss curves to compare");
  }
  for (const auto& c : curves) {
    if (c.values.size() != curves.front().values.size()) {
      throw Error(ErrorCode::kLengthMismatch,
                  "loss curve '" + c.name + "' has " + std::to_string(c.values.size()) +
                      " points but '" + curves.front().name + "' has " +
                      std::to_string(curves.front().values.size()));
    }
  }
  std::vector<SmoothnessEntry> entries;
  entries.reserve(curves.size());
  for (const auto& c : curves) entries.push_back({0, spectral_report(c, cutoff_fraction)});
  std::stable_sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    return a.report.high_freq_ratio < b.report.high_freq_ratio;
  });
  for (std::size_t i = 0; i < entries.size(); ++i) entries[i].rank = i + 1;
  return entries;
}

LossCurve parse_loss_curve(std::string_view content, std::string name, bool jsonl) {
  std::map<long long, double> rows;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < content.size()) {
    std::size_t end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    std::string_view line = trim(content.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    const std::string where = name + ":" + std::to_string(line_no) + ": ";

    long long step = 0;
    double loss = 0.0;
    if (jsonl) {
      try {
        json j = json::parse(line);
        step = j.at("step").get<long long>();
        loss = j.at("loss").get<double>();
      } catch (const json::exception& e) {
        throw Error(ErrorCode::kParse, where + e.what());
      }
    } else {
      std::size_t comma = line.find(',');
      if (comma == std::string_view::npos) {
        throw Error(ErrorCode::kParse, where + "expected 'step,loss'");
      }
      std::string_view a = line.substr(0, comma);
      std::string_view b = line.substr(comma + 1);
      if (line_no == 1 && trim(a) == "step") continue;
      if (!parse_number(a, step) || !parse_number(b, loss)) {
        throw Error(ErrorCode::kParse, where + "expected 'step,loss'");
      }
    }
    if (!rows.emplace(step, loss).second) {
      throw Error(ErrorCode::kParse, where + "step " + std::to_string(step) + " repeated");
    }
  }
  LossCurve curve;
  curve.name = std::move(name);
  curve.values.reserve(rows.size());
  for (const auto& [step, loss] : rows) curve.values.push_back(loss);
  return curve;
}

LossCurve load_loss_curve(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorCode::kIo, "loss curve file not found: " + path.string());
  }
  const std::string ext = path.extension().string();
  const bool jsonl = ext == ".jsonl" || ext == ".json";
  return parse_loss_curve(read_file(path), path.stem().string(), jsonl);
}

std::string serialize_spectral_reports(std::span<const SmoothnessEntry> entries) {
  std::string out;
  for (const auto& e : entries) {
    out += report_json(e).dump();
    out += '\n';
  }
  return out;
}

std::string smoothness_table_csv(std::span<const SmoothnessEntry> entries) {
  // json's number formatting gives the shortest round-trip representation.
  auto num = [](double v) { return json(v).dump(); };
  std::ostringstream out;
  out << "rank,name,length,cutoff_fraction,high_freq_ratio\n";
  for (const auto& e : entries) {
    out << e.rank << ',' << e.report.name << ',' << e.report.length << ','
        << num(e.report.cutoff_fraction) << ',' << num(e.report.high_freq_ratio) << '\n';
  }
  return out.str();
}

}  // namespace frame
