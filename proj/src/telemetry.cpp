#include "noisy/telemetry.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <iterator>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "csv_util.hpp"
#include "noisy/errors.hpp"

namespace noisy {
namespace {

constexpr std::string_view kRawColumns[] = {
    "timestamp_s", "cpu_util_pct", "bw_in_bps", "bw_out_bps", "noise_cpu_pct"};

void check_percent(double v, std::size_t line, std::string_view column) {
  if (v < 0.0 || v > 100.0) {
    throw ParseError(line, std::string(column) + " outside [0,100]");
  }
}

void check_non_negative(double v, std::size_t line, std::string_view column) {
  if (v < 0.0) throw ParseError(line, std::string(column) + " is negative");
}

Label parse_label(std::string_view field, std::size_t line) {
  if (field == "1" || field == "+1") return Label::kNoisy;
  if (field == "-1") return Label::kQuiet;
  throw ParseError(line, "label must be -1 or 1, got '" + std::string(field) +
                             "'");
}

std::size_t parse_count(std::string_view field, std::size_t line) {
  std::size_t v = 0;
  const auto [ptr, ec] =
      std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || v == 0) {
    throw ParseError(line, "sample_count must be a positive integer");
  }
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

std::vector<RawSample> parse_samples(std::string_view text) {
  detail::LineReader reader(text);
  detail::expect_header(reader.next(), kRawHeader);
  std::vector<RawSample> out;
  while (auto line = reader.next()) {
    const std::size_t no = reader.line_no();
    const auto fields = detail::split_fields(*line);
    detail::expect_columns(fields, 5, no);
    RawSample s;
    s.timestamp = detail::parse_number(fields[0], no, kRawColumns[0]);
    s.cpu_util = detail::parse_number(fields[1], no, kRawColumns[1]);
    s.bw_in = detail::parse_number(fields[2], no, kRawColumns[2]);
    s.bw_out = detail::parse_number(fields[3], no, kRawColumns[3]);
    s.noise_cpu = detail::parse_number(fields[4], no, kRawColumns[4]);
    check_non_negative(s.timestamp, no, kRawColumns[0]);
    check_percent(s.cpu_util, no, kRawColumns[1]);
    check_non_negative(s.bw_in, no, kRawColumns[2]);
    check_non_negative(s.bw_out, no, kRawColumns[3]);
    check_percent(s.noise_cpu, no, kRawColumns[4]);
    if (!out.empty() && !(s.timestamp > out.back().timestamp)) {
      throw OrderingError(no, "timestamp " + format_double(s.timestamp) +
                                  " does not increase");
    }
    out.push_back(s);
  }
  return out;
}

std::vector<RawSample> parse_samples(std::istream& in) {
  const std::string text((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
  return parse_samples(text);
}

void write_samples(std::ostream& out, std::span<const RawSample> samples) {
  out << kRawHeader << '\n';
  for (const auto& s : samples) {
    out << format_double(s.timestamp) << ',' << format_double(s.cpu_util)
        << ',' << format_double(s.bw_in) << ',' << format_double(s.bw_out)
        << ',' << format_double(s.noise_cpu) << '\n';
  }
}

std::vector<Window> aggregate_windows(std::span<const RawSample> samples,
                                      double window_len) {
  if (!(window_len > 0.0) || !std::isfinite(window_len)) {
    throw std::invalid_argument("window_len must be positive");
  }
  std::vector<Window> out;
  if (samples.empty()) return out;

  const double anchor = std::floor(samples.front().timestamp / window_len) *
                        window_len;

  struct Accumulator {
    std::array<double, 4> sum{};
    std::array<double, 4> lo{};
    std::array<double, 4> hi{};
    std::size_t n = 0;
  };
  auto flush = [&](long long index, const Accumulator& acc) {
    Window w;
    w.window_start = anchor + static_cast<double>(index) * window_len;
    std::array<double, 4> mean{};
    for (std::size_t j = 0; j < 4; ++j) {
      // Rounding in the sum can push the quotient just past the extremes.
      mean[j] = std::clamp(acc.sum[j] / static_cast<double>(acc.n), acc.lo[j],
                           acc.hi[j]);
    }
    w.features = {mean[0], mean[1], mean[2]};
    w.noise_cpu = mean[3];
    w.sample_count = acc.n;
    out.push_back(w);
  };

  Accumulator acc;
  long long current = -1;
  double previous = -std::numeric_limits<double>::infinity();
  for (const auto& s : samples) {
    if (!(s.timestamp > previous)) {
      throw std::invalid_argument("samples must be ordered by timestamp");
    }
    previous = s.timestamp;
    const auto index =
        static_cast<long long>(std::floor((s.timestamp - anchor) / window_len));
    if (index != current) {
      if (acc.n > 0) flush(current, acc);
      acc = Accumulator{};
      current = index;
    }
    const std::array<double, 4> v{s.cpu_util, s.bw_in, s.bw_out, s.noise_cpu};
    for (std::size_t j = 0; j < 4; ++j) {
      acc.sum[j] += v[j];
      acc.lo[j] = acc.n == 0 ? v[j] : std::min(acc.lo[j], v[j]);
      acc.hi[j] = acc.n == 0 ? v[j] : std::max(acc.hi[j], v[j]);
    }
    ++acc.n;
  }
  flush(current, acc);
  return out;
}

Dataset label_windows(std::span<const Window> windows, double noise_threshold,
                      std::string provenance) {
  if (!(noise_threshold > 0.0 && noise_threshold < 100.0)) {
    throw std::invalid_argument("noise_threshold must lie in (0, 100)");
  }
  Dataset d;
  d.provenance = std::move(provenance);
  d.instances.reserve(windows.size());
  for (const auto& w : windows) {
    Instance inst;
    inst.window_start = w.window_start;
    inst.features = w.features;
    inst.label =
        w.noise_cpu >= noise_threshold ? Label::kNoisy : Label::kQuiet;
    inst.sample_count = w.sample_count;
    d.instances.push_back(inst);
  }
  return d;
}

DatasetSummary dataset_summary(const Dataset& d) {
  DatasetSummary s;
  s.total = d.instances.size();
  s.positives = static_cast<std::size_t>(
      std::count_if(d.instances.begin(), d.instances.end(),
                    [](const Instance& i) { return i.label == Label::kNoisy; }));
  return s;
}

Dataset parse_dataset(std::string_view text, std::string provenance) {
  detail::LineReader reader(text);
  detail::expect_header(reader.next(), kDatasetHeader);
  Dataset d;
  d.provenance = std::move(provenance);
  while (auto line = reader.next()) {
    const std::size_t no = reader.line_no();
    const auto fields = detail::split_fields(*line);
    detail::expect_columns(fields, 5, no);
    Instance inst;
    inst.window_start = detail::parse_number(fields[0], no, "window_start_s");
    for (std::size_t j = 0; j < kNumFeatures; ++j) {
      inst.features[j] = detail::parse_number(fields[j + 1], no, "feature");
    }
    inst.label = parse_label(fields[4], no);
    d.instances.push_back(inst);
  }
  return d;
}

void write_dataset(std::ostream& out, const Dataset& d) {
  out << kDatasetHeader << '\n';
  for (const auto& inst : d.instances) {
    out << format_double(inst.window_start);
    for (double f : inst.features) out << ',' << format_double(f);
    out << ',' << (inst.label == Label::kNoisy ? "1" : "-1") << '\n';
  }
}

std::vector<Window> parse_windows(std::string_view text) {
  detail::LineReader reader(text);
  detail::expect_header(reader.next(), kWindowsHeader);
  std::vector<Window> out;
  while (auto line = reader.next()) {
    const std::size_t no = reader.line_no();
    const auto fields = detail::split_fields(*line);
    detail::expect_columns(fields, 6, no);
    Window w;
    w.window_start = detail::parse_number(fields[0], no, "window_start_s");
    for (std::size_t j = 0; j < kNumFeatures; ++j) {
      w.features[j] = detail::parse_number(fields[j + 1], no, "feature");
    }
    w.noise_cpu = detail::parse_number(fields[4], no, "noise_cpu_pct");
    w.sample_count = parse_count(fields[5], no);
    out.push_back(w);
  }
  return out;
}

void write_windows(std::ostream& out, std::span<const Window> windows) {
  out << kWindowsHeader << '\n';
  for (const auto& w : windows) {
    out << format_double(w.window_start);
    for (double f : w.features) out << ',' << format_double(f);
    out << ',' << format_double(w.noise_cpu) << ',' << w.sample_count << '\n';
  }
}

}  // namespace noisy
