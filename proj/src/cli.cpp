#include "noisy/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "noisy/analysis.hpp"
#include "noisy/eval.hpp"
#include "noisy/features.hpp"
#include "noisy/forest.hpp"
#include "noisy/model_file.hpp"
#include "noisy/simulator.hpp"
#include "noisy/svm.hpp"
#include "noisy/telemetry.hpp"

namespace noisy::cli {
namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

template <typename Fn>
std::string to_string_with(Fn&& fn) {
  std::ostringstream ss;
  fn(ss);
  return ss.str();
}

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) {
      throw std::runtime_error("bad number '" + item + "' in grid list");
    }
    out.push_back(v);
  }
  return out;
}

// Flags shared by train/evaluate/sweep.
struct ModelFlags {
  std::string model = "svm";
  double c = kDefaultSvmC;
  double gamma = 0.0;  // 0 = 1 / post-expansion dimension
  std::size_t trees = 300;
  std::size_t min_leaf = 1;
  std::string expand;  // empty = per-model default
  std::string order = "standardize-first";
  unsigned threads = 0;

  Expansion expansion() const {
    if (expand.empty()) {
      return model == "svm" ? Expansion::kQuadratic : Expansion::kNone;
    }
    return expand == "quadratic" ? Expansion::kQuadratic : Expansion::kNone;
  }
  PipelineOrder pipeline_order() const {
    return order == "expand-first" ? PipelineOrder::kExpandThenStandardize
                                   : PipelineOrder::kStandardizeThenExpand;
  }
  double resolved_gamma() const {
    if (gamma > 0.0) return gamma;
    return 1.0 / static_cast<double>(expansion() == Expansion::kQuadratic
                                          ? kExpandedFeatures
                                          : kNumFeatures);
  }
  SvmHyperparams svm() const {
    SvmHyperparams h;
    h.c = c;
    h.gamma = resolved_gamma();
    return h;
  }
  ForestHyperparams forest(std::uint64_t seed) const {
    ForestHyperparams h;
    h.n_trees = trees;
    h.min_leaf = min_leaf;
    h.seed = seed;
    h.threads = threads;
    return h;
  }
  Trainer trainer(bool folds_parallel) const {
    if (model == "svm") {
      return make_svm_trainer(svm(), expansion(), pipeline_order());
    }
    if (model == "threshold") {
      Trainer t = make_threshold_trainer();
      t.expansion = expansion();
      t.order = pipeline_order();
      return t;
    }
    ForestHyperparams h = forest(0);
    if (folds_parallel) h.threads = 1;
    Trainer t = make_forest_trainer(h);
    t.expansion = expansion();
    t.order = pipeline_order();
    return t;
  }
};

void add_model_flags(CLI::App* cmd, ModelFlags& f, bool allow_threshold) {
  std::vector<std::string> kinds{"svm", "forest"};
  if (allow_threshold) kinds.push_back("threshold");
  cmd->add_option("--model", f.model, "Classifier")
      ->check(CLI::IsMember(kinds))
      ->capture_default_str();
  cmd->add_option("--c", f.c, "SVM penalty C")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--gamma", f.gamma,
                  "Gaussian kernel width (default 1/feature dimension)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--trees", f.trees, "Number of bagged trees")
      ->check(CLI::Range(std::size_t{1}, std::size_t{1} << 20))
      ->capture_default_str();
  cmd->add_option("--min-leaf", f.min_leaf, "Minimum rows per leaf")
      ->check(CLI::Range(std::size_t{1}, std::size_t{1} << 30))
      ->capture_default_str();
  cmd->add_option("--expand", f.expand,
                  "Feature expansion (default: quadratic for svm, none otherwise)")
      ->check(CLI::IsMember({"quadratic", "none"}));
  cmd->add_option("--order", f.order, "Standardize before or after expansion")
      ->check(CLI::IsMember({"standardize-first", "expand-first"}))
      ->capture_default_str();
  cmd->add_option("--threads", f.threads, "Worker threads (0 = all cores)")
      ->capture_default_str();
}

void print_report(std::ostream& out, const EvalReport& r) {
  out << "model: " << r.model_descriptor << '\n';
  out << "fold      tp      fp      tn      fn\n";
  char buf[128];
  for (std::size_t f = 0; f < r.per_fold.size(); ++f) {
    const auto& c = r.per_fold[f];
    std::snprintf(buf, sizeof(buf), "%4zu %7zu %7zu %7zu %7zu\n", f, c.tp, c.fp,
                  c.tn, c.fn);
    out << buf;
  }
  std::snprintf(buf, sizeof(buf), "all  %7zu %7zu %7zu %7zu\n", r.pooled.tp,
                r.pooled.fp, r.pooled.tn, r.pooled.fn);
  out << buf;
  out << "precision " << fixed(r.precision) << "  recall " << fixed(r.recall)
      << "  f1 " << fixed(r.f1) << '\n';
}

std::vector<Window> load_windows(const std::string& path, double window,
                                 bool* from_raw) {
  const std::string text = read_file(path);
  const std::string_view first_line =
      std::string_view(text).substr(0, text.find('\n'));
  if (first_line.rfind(kRawHeader, 0) == 0 &&
      first_line.substr(0, kRawHeader.size()) == kRawHeader &&
      first_line.size() <= kRawHeader.size() + 1) {
    *from_raw = true;
    return aggregate_windows(parse_samples(text), window);
  }
  *from_raw = false;
  return parse_windows(text);
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err) {
  CLI::App app{"Noisy-neighbor detection from coarse VM telemetry"};
  app.name("noisyctl");
  app.require_subcommand(1);

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Generate synthetic telemetry");
  std::string sim_config, sim_out, sim_truth, sim_config_out;
  bool sim_standard = false;
  std::uint64_t sim_seed = 0;
  auto* sim_config_opt =
      simulate->add_option("--config", sim_config, "Scenario config file");
  auto* sim_standard_opt = simulate->add_flag(
      "--standard-benchmark", sim_standard, "Use the frozen benchmark scenario");
  sim_config_opt->excludes(sim_standard_opt);
  simulate->add_option("--out", sim_out, "Raw telemetry CSV to write")->required();
  simulate->add_option("--truth-out", sim_truth, "Noise schedule CSV to write");
  simulate->add_option("--config-out", sim_config_out,
                       "Write the effective scenario config");
  auto* sim_seed_opt =
      simulate->add_option("--seed", sim_seed, "Override the scenario seed");

  // aggregate
  auto* aggregate = app.add_subcommand(
      "aggregate", "Window raw telemetry and attach noise labels");
  std::string agg_in, agg_out, agg_windows_out;
  double agg_window = kDefaultWindowSeconds;
  double agg_threshold = kDefaultNoiseThreshold;
  aggregate->add_option("--in", agg_in, "Raw telemetry CSV")->required();
  aggregate->add_option("--out", agg_out, "Labeled dataset CSV")->required();
  aggregate->add_option("--windows-out", agg_windows_out,
                        "Also write windows with the noise column retained");
  aggregate->add_option("--window", agg_window, "Window length in seconds")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  aggregate->add_option("--noise-threshold", agg_threshold,
                        "Noise-VM CPU percent at or above which a window is noisy")
      ->check(CLI::Range(0.0, 100.0))
      ->capture_default_str();

  // analyze
  auto* analyze = app.add_subcommand(
      "analyze", "Correlation and MIC of each feature against the noise");
  std::string an_in, an_csv_out, an_target = "noise-cpu";
  double an_window = kDefaultWindowSeconds;
  double an_threshold = kDefaultNoiseThreshold;
  analyze->add_option("--in", an_in, "Raw telemetry CSV or windows CSV")
      ->required();
  analyze->add_option("--window", an_window,
                      "Window length when the input is raw telemetry")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  analyze->add_option("--target", an_target, "Dependence target")
      ->check(CLI::IsMember({"noise-cpu", "binary-label"}))
      ->capture_default_str();
  analyze->add_option("--noise-threshold", an_threshold,
                      "Threshold for the binary-label target")
      ->check(CLI::Range(0.0, 100.0))
      ->capture_default_str();
  analyze->add_option("--csv-out", an_csv_out, "Write the report as CSV");

  // train
  auto* train = app.add_subcommand("train", "Train a model on a dataset");
  std::string tr_in, tr_out;
  std::uint64_t tr_seed = 0;
  ModelFlags tr_flags;
  train->add_option("--in", tr_in, "Labeled dataset CSV")->required();
  train->add_option("--out", tr_out, "Model file to write")->required();
  train->add_option("--seed", tr_seed, "Random seed")->capture_default_str();
  add_model_flags(train, tr_flags, false);

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "k-fold cross-validation");
  std::string ev_in, ev_report_out;
  std::uint64_t ev_seed = 0;
  std::size_t ev_k = 10;
  bool ev_stratified = false;
  ModelFlags ev_flags;
  evaluate->add_option("--in", ev_in, "Labeled dataset CSV")->required();
  evaluate->add_option("--k", ev_k, "Number of folds")
      ->check(CLI::Range(std::size_t{2}, std::size_t{1} << 30))
      ->capture_default_str();
  evaluate->add_option("--seed", ev_seed, "Random seed")->capture_default_str();
  evaluate->add_flag("--stratified", ev_stratified, "Stratify folds by label");
  evaluate->add_option("--report-out", ev_report_out, "Write the report as JSON");
  add_model_flags(evaluate, ev_flags, true);

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Cross-validate over a parameter grid");
  std::string sw_in, sw_out, sw_param = "c", sw_grid;
  std::uint64_t sw_seed = 0;
  std::size_t sw_k = 10;
  bool sw_stratified = false;
  ModelFlags sw_flags;
  sweep->add_option("--in", sw_in, "Labeled dataset CSV")->required();
  sweep->add_option("--out", sw_out, "Curve CSV to write")->required();
  sweep->add_option("--param", sw_param, "Swept parameter")
      ->check(CLI::IsMember({"c", "trees"}))
      ->capture_default_str();
  sweep->add_option("--grid", sw_grid,
                    "Comma-separated increasing values (default grid if absent)");
  sweep->add_option("--k", sw_k, "Number of folds")
      ->check(CLI::Range(std::size_t{2}, std::size_t{1} << 30))
      ->capture_default_str();
  sweep->add_option("--seed", sw_seed, "Random seed")->capture_default_str();
  sweep->add_flag("--stratified", sw_stratified, "Stratify folds by label");
  sweep->add_option("--gamma", sw_flags.gamma, "Gaussian kernel width")
      ->check(CLI::PositiveNumber);
  sweep->add_option("--min-leaf", sw_flags.min_leaf, "Minimum rows per leaf")
      ->capture_default_str();
  sweep->add_option("--threads", sw_flags.threads, "Worker threads (0 = all cores)")
      ->capture_default_str();

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "Label windows with a model");
  std::string pr_model, pr_in, pr_out;
  predict_cmd->add_option("--model-file", pr_model, "Model file")->required();
  predict_cmd->add_option("--in", pr_in, "Labeled dataset CSV")->required();
  predict_cmd->add_option("--out", pr_out, "Predictions CSV (stdout if absent)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    err << "\n" << app.help();
    return kExitUsage;
  }

  try {
    if (simulate->parsed()) {
      if (sim_config.empty() && !sim_standard) {
        err << "simulate: pass --config FILE or --standard-benchmark\n";
        return kExitUsage;
      }
      ScenarioConfig config = sim_standard ? standard_benchmark_scenario()
                                           : parse_scenario(read_file(sim_config));
      if (sim_seed_opt->count() > 0) config.seed = sim_seed;
      const auto result = generate(config);
      write_file(sim_out, to_string_with([&](std::ostream& os) {
                   write_samples(os, result.samples);
                 }));
      if (!sim_truth.empty()) {
        write_file(sim_truth, to_string_with([&](std::ostream& os) {
                     write_truth(os, result.truth);
                   }));
      }
      if (!sim_config_out.empty()) write_file(sim_config_out, emit_scenario(config));
      out << "wrote " << result.samples.size() << " samples to " << sim_out
          << '\n';
      return kExitOk;
    }

    if (aggregate->parsed()) {
      if (!(agg_threshold > 0.0 && agg_threshold < 100.0)) {
        err << "aggregate: --noise-threshold must lie strictly between 0 and 100\n";
        return kExitUsage;
      }
      const auto samples = parse_samples(read_file(agg_in));
      const auto windows = aggregate_windows(samples, agg_window);
      const Dataset d = label_windows(windows, agg_threshold, agg_in);
      write_file(agg_out,
                 to_string_with([&](std::ostream& os) { write_dataset(os, d); }));
      if (!agg_windows_out.empty()) {
        write_file(agg_windows_out, to_string_with([&](std::ostream& os) {
                     write_windows(os, windows);
                   }));
      }
      const auto s = dataset_summary(d);
      out << "windows " << s.total << "  noisy " << s.positives << '\n';
      return kExitOk;
    }

    if (analyze->parsed()) {
      bool from_raw = false;
      const auto windows = load_windows(an_in, an_window, &from_raw);
      const auto target = an_target == "noise-cpu"
                              ? DependenceTarget::kNoiseCpu
                              : DependenceTarget::kBinaryLabel;
      const auto report = feature_noise_report(windows, target, an_threshold);
      out << report.to_table();
      if (!an_csv_out.empty()) write_file(an_csv_out, report.to_csv());
      return kExitOk;
    }

    if (train->parsed()) {
      const Dataset d = parse_dataset(read_file(tr_in), tr_in);
      if (d.instances.empty()) throw std::runtime_error("dataset is empty");
      ModelFile file;
      file.preprocessor = fit_preprocessor(d.instances, tr_flags.expansion(),
                                           tr_flags.pipeline_order());
      const FeatureMatrix x = file.preprocessor.transform(d.instances);
      std::vector<Label> y;
      for (const auto& inst : d.instances) y.push_back(inst.label);
      if (tr_flags.model == "svm") {
        file.payload = train_smo(x, y, tr_flags.svm(), tr_seed);
      } else {
        file.payload = train_forest(x, y, tr_flags.forest(tr_seed));
      }
      write_file(tr_out, serialize_model(file));
      out << "trained " << tr_flags.model << " on " << d.instances.size()
          << " windows -> " << tr_out << '\n';
      return kExitOk;
    }

    if (evaluate->parsed()) {
      const Dataset d = parse_dataset(read_file(ev_in), ev_in);
      CvOptions opts;
      opts.k = ev_k;
      opts.seed = ev_seed;
      opts.stratified = ev_stratified;
      opts.threads = ev_flags.threads;
      const auto report = cross_validate(ev_flags.trainer(true), d, opts);
      print_report(out, report);
      if (!ev_report_out.empty()) {
        write_file(ev_report_out, serialize_report(report));
      }
      return kExitOk;
    }

    if (sweep->parsed()) {
      const Dataset d = parse_dataset(read_file(sw_in), sw_in);
      CvOptions opts;
      opts.k = sw_k;
      opts.seed = sw_seed;
      opts.stratified = sw_stratified;
      opts.threads = sw_flags.threads;
      SweepCurve curve;
      if (sw_param == "c") {
        const auto grid = sw_grid.empty() ? default_svm_c_grid()
                                          : parse_list(sw_grid);
        sw_flags.model = "svm";
        curve = sweep_svm_c(d, grid, sw_flags.resolved_gamma(), opts);
      } else {
        std::vector<std::size_t> grid;
        if (sw_grid.empty()) {
          grid = default_tree_grid();
        } else {
          for (double v : parse_list(sw_grid)) {
            if (v < 1 || v != static_cast<double>(static_cast<std::size_t>(v))) {
              throw std::runtime_error("tree counts must be positive integers");
            }
            grid.push_back(static_cast<std::size_t>(v));
          }
        }
        curve = sweep_forest_trees(d, grid, opts, sw_flags.min_leaf);
      }
      const std::string csv = emit_curve_csv(curve);
      write_file(sw_out, csv);
      out << csv;
      return kExitOk;
    }

    if (predict_cmd->parsed()) {
      const ModelFile model = parse_model(read_file(pr_model));
      const Dataset d = parse_dataset(read_file(pr_in), pr_in);
      std::string csv = "window_start_s,label\n";
      for (const auto& inst : d.instances) {
        csv += format_double(inst.window_start);
        csv += model.predict(inst.features) == Label::kNoisy ? ",1\n" : ",-1\n";
      }
      if (pr_out.empty()) {
        out << csv;
      } else {
        write_file(pr_out, csv);
      }
      return kExitOk;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace noisy::cli
