#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace noisy {

enum class Label : int { kQuiet = -1, kNoisy = 1 };

inline double sign(Label y) { return y == Label::kNoisy ? 1.0 : -1.0; }

inline constexpr std::size_t kNumFeatures = 3;
using FeatureVector = std::array<double, kNumFeatures>;

// One telemetry reading of the monitored server VM, plus the CPU of the
// noise VM(s) which serves only as ground truth.
struct RawSample {
  double timestamp = 0.0;  // seconds
  double cpu_util = 0.0;   // percent
  double bw_in = 0.0;      // bytes/sec
  double bw_out = 0.0;     // bytes/sec
  double noise_cpu = 0.0;  // percent

  bool operator==(const RawSample&) const = default;
};

// A tumbling window before labeling. noise_cpu is the mean ground truth.
struct Window {
  double window_start = 0.0;
  FeatureVector features{};  // mean cpu_util, bw_in, bw_out
  double noise_cpu = 0.0;
  std::size_t sample_count = 0;

  bool operator==(const Window&) const = default;
};

struct Instance {
  double window_start = 0.0;
  FeatureVector features{};
  Label label = Label::kQuiet;
  std::size_t sample_count = 1;

  bool operator==(const Instance&) const = default;
};

struct Dataset {
  std::vector<Instance> instances;
  std::string provenance;
};

struct DatasetSummary {
  std::size_t total = 0;
  std::size_t positives = 0;

  bool operator==(const DatasetSummary&) const = default;
};

inline constexpr std::string_view kRawHeader =
    "timestamp_s,cpu_util_pct,bw_in_bps,bw_out_bps,noise_cpu_pct";
inline constexpr std::string_view kDatasetHeader =
    "window_start_s,cpu_util_pct,bw_in_bps,bw_out_bps,label";
inline constexpr std::string_view kWindowsHeader =
    "window_start_s,cpu_util_pct,bw_in_bps,bw_out_bps,noise_cpu_pct,"
    "sample_count";

inline constexpr double kDefaultWindowSeconds = 30.0;
inline constexpr double kDefaultNoiseThreshold = 5.0;

// Raw telemetry CSV. Throws ParseError (bad header, column count, number or
// range) and OrderingError (non-increasing timestamps).
std::vector<RawSample> parse_samples(std::string_view text);
std::vector<RawSample> parse_samples(std::istream& in);
void write_samples(std::ostream& out, std::span<const RawSample> samples);

// Tumbling windows anchored at floor(t0 / window_len) * window_len. Windows
// without samples are omitted.
std::vector<Window> aggregate_windows(std::span<const RawSample> samples,
                                      double window_len);

// +1 iff mean noise_cpu >= noise_threshold.
Dataset label_windows(std::span<const Window> windows,
                      double noise_threshold = kDefaultNoiseThreshold,
                      std::string provenance = {});

DatasetSummary dataset_summary(const Dataset& d);

// Labeled dataset CSV. The format carries no sample counts, so parsed
// instances report sample_count = 1.
Dataset parse_dataset(std::string_view text, std::string provenance = {});
void write_dataset(std::ostream& out, const Dataset& d);

// Unlabeled windows with the noise column retained (input to analysis).
std::vector<Window> parse_windows(std::string_view text);
void write_windows(std::ostream& out, std::span<const Window> windows);

// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

}  // namespace noisy
