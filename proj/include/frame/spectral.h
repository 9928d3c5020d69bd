#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace frame {

// Loss values l[n], one per logged step, ordered by step.
struct LossCurve {
  std::string name;
  std::vector<double> values;
};

// One-sided power spectrum PSD[k] = |Y[k]|^2 / N for k = 0..N/2, where Y is
// the unpadded DFT of the curve. Throws Error(kInsufficientSamples) for
// N < 2 and Error(kNonFiniteInput) for NaN or infinite values.
std::vector<double> power_spectral_density(std::span<const double> curve);

// Share of one-sided spectral energy strictly above the cutoff. Bin k sits
// at 2k/N of Nyquist, where N is the length of the curve the spectrum came
// from; the denominator includes the DC bin. Throws Error(kDomain) for a
// cutoff outside (0, 1) or a length that does not produce `psd`, and
// Error(kZeroSpectrum) when every bin is zero.
double high_freq_ratio(std::span<const double> psd, double cutoff_fraction,
                       std::size_t curve_length);

inline constexpr double kDefaultCutoffFraction = 0.1;

struct SpectralReport {
  std::string name;
  std::size_t length = 0;
  double cutoff_fraction = kDefaultCutoffFraction;
  std::vector<double> psd;
  double high_freq_ratio = 0.0;
};

SpectralReport spectral_report(const LossCurve& curve,
                               double cutoff_fraction = kDefaultCutoffFraction);

struct SmoothnessEntry {
  std::size_t rank = 0;  // 1 = smoothest
  SpectralReport report;
};

// Reports in ascending R; ties keep input order. Throws
// Error(kLengthMismatch) when curve lengths differ and
// Error(kInsufficientSamples) for an empty list.
std::vector<SmoothnessEntry> compare_smoothness(std::span<const LossCurve> curves,
                                                double cutoff_fraction = kDefaultCutoffFraction);

// CSV ("step,loss", header optional) or JSON Lines ({"step", "loss"}),
// chosen by the .jsonl/.json extension. Rows are sorted by step; repeated
// steps raise Error(kParse).
LossCurve parse_loss_curve(std::string_view content, std::string name, bool jsonl);
LossCurve load_loss_curve(const std::filesystem::path& path);

// JSON Lines, one report per line, PSD included.
std::string serialize_spectral_reports(std::span<const SmoothnessEntry> entries);
// Plot-friendly table: rank,name,length,cutoff_fraction,high_freq_ratio.
std::string smoothness_table_csv(std::span<const SmoothnessEntry> entries);

}  // namespace frame
