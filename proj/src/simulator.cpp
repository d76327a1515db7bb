#include "noisy/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "csv_util.hpp"
#include "noisy/errors.hpp"
#include "noisy/rng.hpp"

namespace noisy {
namespace {

enum Stream : std::uint64_t {
  kTiming = 1,
  kDropout = 2,
  kCpuNoise = 3,
  kBwInNoise = 4,
  kBwOutNoise = 5,
  kNoiseCpuNoise = 6,
  kScheduleDesign = 7,
};

double unit(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Standard normal for nominal sample k, independent of every other k.
double normal_at(const RngStream& s, std::uint64_t k) {
  double u1 = unit(s.at(2 * k));
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  const double u2 = unit(s.at(2 * k + 1));
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

template <typename Interval>
void check_intervals(const std::vector<Interval>& v, double duration,
                     const char* what) {
  std::vector<Interval> sorted = v;
  std::sort(sorted.begin(), sorted.end(),
            [](const Interval& a, const Interval& b) { return a.start < b.start; });
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const auto& iv = sorted[i];
    if (!(iv.start >= 0.0 && iv.end <= duration && iv.start < iv.end)) {
      throw std::invalid_argument(std::string(what) +
                                  ": interval outside [0, duration]");
    }
    if (i > 0 && iv.start < sorted[i - 1].end) {
      throw std::invalid_argument(std::string(what) + ": intervals overlap");
    }
  }
}

template <typename Interval>
const Interval* find_interval(const std::vector<Interval>& v, double t) {
  for (const auto& iv : v) {
    if (t >= iv.start && t < iv.end) return &iv;
  }
  return nullptr;
}

std::string shape_name(NoiseShape s) {
  return s == NoiseShape::kOneLargeVm ? "one-large-vm" : "many-small-vms";
}

template <typename Interval, typename Field>
std::string emit_intervals(const std::vector<Interval>& v, Field field) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) out += ',';
    out += format_double(v[i].start) + ':' + format_double(v[i].end) + ':' +
           format_double(v[i].*field);
  }
  return out;
}

template <typename Interval, typename Field>
std::vector<Interval> parse_intervals(std::string_view text, std::size_t line,
                                      Field field) {
  std::vector<Interval> out;
  if (text.empty()) return out;
  for (std::string_view item : detail::split_fields(text)) {
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    const std::size_t a = item.find(':');
    const std::size_t b = a == std::string_view::npos ? a : item.find(':', a + 1);
    if (b == std::string_view::npos) {
      throw ParseError(line, "interval must be start:end:value");
    }
    Interval iv;
    iv.start = detail::parse_number(item.substr(0, a), line, "start");
    iv.end = detail::parse_number(item.substr(a + 1, b - a - 1), line, "end");
    iv.*field = detail::parse_number(item.substr(b + 1), line, "value");
    out.push_back(iv);
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

}  // namespace

double saturate(double z) { return z / (1.0 + z); }

void validate(const ScenarioConfig& c) {
  auto require = [](bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
  };
  require(c.duration > 0.0 && std::isfinite(c.duration), "duration must be > 0");
  require(c.sample_period > 0.0 && std::isfinite(c.sample_period),
          "sample_period must be > 0");
  require(c.jitter_frac >= 0.0 && c.jitter_frac <= 1.0,
          "jitter_frac must lie in [0, 1]");
  require(c.dropout_prob >= 0.0 && c.dropout_prob <= 1.0,
          "dropout_prob must lie in [0, 1]");
  require(c.base_cpu >= 0.0 && c.base_cpu <= 100.0,
          "base_cpu must lie in [0, 100]");
  require(c.traffic_rate >= 0.0 && std::isfinite(c.traffic_rate),
          "traffic_rate must be >= 0");
  require(c.contention_gain >= 0.0 && std::isfinite(c.contention_gain),
          "contention_gain must be >= 0");
  require(c.sensor_noise_std >= 0.0 && std::isfinite(c.sensor_noise_std),
          "sensor_noise_std must be >= 0");
  if (c.noise_shape == NoiseShape::kManySmallVms) {
    require(c.noise_vm_count >= 18 && c.noise_vm_count <= 24,
            "noise_vm_count must lie in [18, 24]");
  }
  for (const auto& iv : c.noise_schedule) {
    require(iv.intensity >= 0.0 && iv.intensity <= 1.0,
            "noise intensity must lie in [0, 1]");
  }
  for (const auto& seg : c.traffic_schedule) {
    require(seg.level > 0.0 && std::isfinite(seg.level),
            "traffic level must be > 0");
  }
  check_intervals(c.noise_schedule, c.duration, "noise_schedule");
  check_intervals(c.traffic_schedule, c.duration, "traffic_schedule");
}

SimulationResult generate(const ScenarioConfig& c) {
  validate(c);
  const RngStream root(c.seed);
  const RngStream timing = root.substream(kTiming);
  const RngStream dropout = root.substream(kDropout);
  const RngStream cpu_noise = root.substream(kCpuNoise);
  const RngStream in_noise = root.substream(kBwInNoise);
  const RngStream out_noise = root.substream(kBwOutNoise);
  const RngStream vm_noise = root.substream(kNoiseCpuNoise);

  SimulationResult result;
  result.truth.noise_schedule = c.noise_schedule;
  const double sigma = c.sensor_noise_std;
  for (std::uint64_t k = 0;; ++k) {
    const double nominal = static_cast<double>(k) * c.sample_period;
    if (!(nominal < c.duration)) break;
    const double t = nominal + c.jitter_frac * c.sample_period * unit(timing.at(k));
    if (unit(dropout.at(k)) < c.dropout_prob) continue;

    const auto* seg = find_interval(c.traffic_schedule, t);
    const double level = seg ? seg->level : 1.0;
    const auto* noise = find_interval(c.noise_schedule, t);
    const double intensity = noise ? noise->intensity : 0.0;
    const double response = saturate(intensity);

    double vm_cpu = 0.0;
    if (noise) {
      double visible = intensity;
      if (c.noise_shape == NoiseShape::kManySmallVms) {
        const double vms = static_cast<double>(c.noise_vm_count);
        visible = std::round(intensity * vms) / vms;
      }
      vm_cpu = 100.0 * visible * (1.0 + sigma * normal_at(vm_noise, k));
    }

    const double quiet_cpu = c.base_cpu * level;
    const double bw_in = c.traffic_rate * level * kBytesInPerCall;
    const double bw_out = c.traffic_rate * level * kBytesOutPerCall;

    RawSample s;
    s.timestamp = t;
    s.cpu_util = std::clamp(quiet_cpu + c.contention_gain * 100.0 * response +
                                sigma * quiet_cpu * normal_at(cpu_noise, k),
                            0.0, 100.0);
    s.bw_in = std::max(0.0, bw_in + sigma * bw_in * normal_at(in_noise, k));
    s.bw_out = std::max(0.0, bw_out * (1.0 - 0.5 * response) +
                                 sigma * bw_out * normal_at(out_noise, k));
    s.noise_cpu = std::clamp(vm_cpu, 0.0, 100.0);
    result.samples.push_back(s);
    result.truth.noise_cpu.push_back(s.noise_cpu);
  }
  return result;
}

ScenarioConfig standard_benchmark_scenario() {
  constexpr std::size_t kExperiments = 100;
  constexpr double kExperimentSeconds = 2700.0;

  ScenarioConfig c;
  c.seed = 42;
  c.duration = kExperiments * kExperimentSeconds;
  c.sample_period = 10.0;
  c.jitter_frac = 0.2;
  c.dropout_prob = 0.05;
  c.base_cpu = 40.0;
  c.traffic_rate = 25.0;
  c.noise_shape = NoiseShape::kManySmallVms;
  c.noise_vm_count = 20;
  c.contention_gain = 0.1;
  c.sensor_noise_std = 0.05;

  // Experiment layout is drawn once from its own stream and then stored
  // verbatim in the config, so the emitted scenario file is self-contained.
  RngStream design = RngStream(c.seed).substream(kScheduleDesign);
  for (std::size_t e = 0; e < kExperiments; ++e) {
    const double begin = static_cast<double>(e) * kExperimentSeconds;
    const double level = std::round(design.uniform(0.5, 1.6) * 1000.0) / 1000.0;
    c.traffic_schedule.push_back({begin, begin + kExperimentSeconds, level});
    const double length =
        std::round(design.uniform(0.22, 0.45) * kExperimentSeconds);
    const double offset =
        std::round(design.uniform(0.1, 0.9) * (kExperimentSeconds - length));
    const double intensity =
        std::round(design.uniform(0.35, 1.0) * 1000.0) / 1000.0;
    c.noise_schedule.push_back(
        {begin + offset, begin + offset + length, intensity});
  }
  return c;
}

std::string emit_scenario(const ScenarioConfig& c) {
  std::ostringstream out;
  out << "# noisy-neighbor scenario v1\n";
  out << "duration = " << format_double(c.duration) << '\n';
  out << "sample_period = " << format_double(c.sample_period) << '\n';
  out << "jitter_frac = " << format_double(c.jitter_frac) << '\n';
  out << "dropout_prob = " << format_double(c.dropout_prob) << '\n';
  out << "base_cpu = " << format_double(c.base_cpu) << '\n';
  out << "traffic_rate = " << format_double(c.traffic_rate) << '\n';
  out << "noise_shape = " << shape_name(c.noise_shape) << '\n';
  out << "noise_vm_count = " << c.noise_vm_count << '\n';
  out << "contention_gain = " << format_double(c.contention_gain) << '\n';
  out << "sensor_noise_std = " << format_double(c.sensor_noise_std) << '\n';
  out << "seed = " << c.seed << '\n';
  out << "noise_schedule = "
      << emit_intervals(c.noise_schedule, &NoiseInterval::intensity) << '\n';
  out << "traffic_schedule = "
      << emit_intervals(c.traffic_schedule, &TrafficSegment::level) << '\n';
  return out.str();
}

ScenarioConfig parse_scenario(std::string_view text) {
  ScenarioConfig c;
  detail::LineReader reader(text);
  while (auto raw = reader.next()) {
    const std::size_t no = reader.line_no();
    const std::string_view line = trim(*raw);
    if (line.empty() || line.front() == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(no, "expected key = value");
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    auto number = [&] { return detail::parse_number(value, no, key); };
    auto integer = [&]() -> std::uint64_t {
      std::uint64_t v = 0;
      const auto [ptr, ec] =
          std::from_chars(value.data(), value.data() + value.size(), v);
      if (ec != std::errc() || ptr != value.data() + value.size()) {
        throw ParseError(no, key + " must be a non-negative integer");
      }
      return v;
    };
    if (key == "duration") {
      c.duration = number();
    } else if (key == "sample_period") {
      c.sample_period = number();
    } else if (key == "jitter_frac") {
      c.jitter_frac = number();
    } else if (key == "dropout_prob") {
      c.dropout_prob = number();
    } else if (key == "base_cpu") {
      c.base_cpu = number();
    } else if (key == "traffic_rate") {
      c.traffic_rate = number();
    } else if (key == "noise_shape") {
      if (value == "one-large-vm") {
        c.noise_shape = NoiseShape::kOneLargeVm;
      } else if (value == "many-small-vms") {
        c.noise_shape = NoiseShape::kManySmallVms;
      } else {
        throw ParseError(no, "noise_shape must be one-large-vm or many-small-vms");
      }
    } else if (key == "noise_vm_count") {
      c.noise_vm_count = static_cast<std::size_t>(integer());
    } else if (key == "contention_gain") {
      c.contention_gain = number();
    } else if (key == "sensor_noise_std") {
      c.sensor_noise_std = number();
    } else if (key == "seed") {
      c.seed = integer();
    } else if (key == "noise_schedule") {
      c.noise_schedule =
          parse_intervals<NoiseInterval>(value, no, &NoiseInterval::intensity);
    } else if (key == "traffic_schedule") {
      c.traffic_schedule =
          parse_intervals<TrafficSegment>(value, no, &TrafficSegment::level);
    } else {
      throw ParseError(no, "unknown key '" + key + "'");
    }
  }
  validate(c);
  return c;
}

void write_truth(std::ostream& out, const GroundTruth& truth) {
  out << "start_s,end_s,intensity\n";
  for (const auto& iv : truth.noise_schedule) {
    out << format_double(iv.start) << ',' << format_double(iv.end) << ','
        << format_double(iv.intensity) << '\n';
  }
}

}  // namespace noisy
