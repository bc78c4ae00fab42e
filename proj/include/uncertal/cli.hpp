#pragma once

// Orchestration behind the `uncertal` command: resolve the configuration,
// load data, run the benchmark or a selection trace, and write every output
// file atomically (nothing is written unless the whole run succeeds).

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "uncertal/config.hpp"
#include "uncertal/dataset.hpp"
#include "uncertal/errors.hpp"
#include "uncertal/experiment.hpp"
#include "uncertal/strategy.hpp"

#ifndef UNCERTAL_VERSION
#define UNCERTAL_VERSION "0.0.0"
#endif
#ifndef UNCERTAL_DATA_DIR
#define UNCERTAL_DATA_DIR "data"
#endif

namespace uncertal {

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitConfig = 2, kExitData = 3, kExitNumerical = 4 };

/// Command-line overrides; unset fields fall back to the config file.
struct CliOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::vector<std::string>> datasets;
  std::optional<std::vector<std::string>> strategies;
  std::optional<int> trials;
  std::optional<Budget> budget;
  std::optional<double> lambda;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out = "results";
  std::filesystem::path data_dir = UNCERTAL_DATA_DIR;
  bool trace = false;
  /// Worker threads; unset = UNCERTAL_THREADS (0 = automatic).
  std::optional<unsigned> threads;
};

/// Output file name -> contents.
using OutputFiles = std::map<std::string, std::string>;

// ---------------------------------------------------------------------------
// Renderers

inline std::string render_curves_csv(const std::vector<TrialResult>& results) {
  std::string out = "dataset,strategy,trial,step,accuracy\n";
  for (const auto& r : results) {
    const std::string prefix = r.dataset + "," + r.strategy + "," + std::to_string(r.trial) + ",";
    for (std::size_t k = 0; k < r.curve.accuracies.size(); ++k)
      out += prefix + std::to_string(k) + "," + format_real(r.curve.accuracies[k]) + "\n";
  }
  return out;
}

inline std::string render_trials_csv(const std::vector<TrialResult>& results) {
  std::string out = "dataset,strategy,trial,alc,queries,retrains,nonconverged\n";
  for (const auto& r : results) {
    out += r.dataset + "," + r.strategy + "," + std::to_string(r.trial) + "," + format_real(r.alc) +
           "," + std::to_string(r.selected.size()) + "," + std::to_string(r.solver.retrains) + "," +
           std::to_string(r.solver.nonconverged) + "\n";
  }
  return out;
}

inline std::string render_summary_csv(const ComparisonTable& t) {
  std::string out = "dataset";
  for (const auto& s : t.strategies) out += "," + s;
  out += "\n";
  for (std::size_t d = 0; d < t.datasets.size(); ++d) {
    out += t.datasets[d];
    for (const double v : t.mean_alc[d]) out += "," + format_real(v);
    out += "\n";
  }
  out += "Mean";
  for (const double v : t.mean_row) out += "," + format_real(v);
  out += "\nAverage Rank";
  for (const double v : t.average_rank) out += "," + format_real(v);
  out += "\n";
  return out;
}

inline std::string render_pairwise_csv(const ComparisonTable& t) {
  std::string out = "method,baseline,dataset,mean_difference,t_statistic,critical,decision\n";
  for (const auto& cmp : t.pairwise) {
    for (std::size_t d = 0; d < t.datasets.size(); ++d) {
      const auto& test = cmp.per_dataset[d];
      out += cmp.method + "," + cmp.baseline + "," + t.datasets[d] + "," +
             format_real(test.mean_difference) + "," + format_real(test.t_statistic) + "," +
             format_real(test.critical) + "," + std::string(to_string(test.decision)) + "\n";
    }
  }
  return out;
}

/// Aligned text table: one row per dataset, then Mean, Average Rank and the
/// win/tie/loss footer.
inline std::string render_summary_text(const ComparisonTable& t) {
  std::size_t first = std::string("Average Rank").size();
  for (const auto& d : t.datasets) first = std::max(first, d.size());
  std::size_t width = 7;
  for (const auto& s : t.strategies) width = std::max(width, s.size());

  std::ostringstream out;
  out << std::fixed << std::setprecision(3);
  const auto row = [&](const std::string& label, const std::vector<double>& values) {
    out << std::left << std::setw(static_cast<int>(first)) << label;
    for (const double v : values) out << "  " << std::right << std::setw(static_cast<int>(width)) << v;
    out << '\n';
  };
  out << std::left << std::setw(static_cast<int>(first)) << "Dataset";
  for (const auto& s : t.strategies) out << "  " << std::right << std::setw(static_cast<int>(width)) << s;
  out << '\n';
  const std::size_t rule = first + t.strategies.size() * (width + 2);
  out << std::string(rule, '-') << '\n';
  for (std::size_t d = 0; d < t.datasets.size(); ++d) row(t.datasets[d], t.mean_alc[d]);
  out << std::string(rule, '-') << '\n';
  row("Mean", t.mean_row);
  row("Average Rank", t.average_rank);
  if (!t.pairwise.empty()) {
    out << std::string(rule, '=') << '\n';
    for (const auto& cmp : t.pairwise)
      out << "Win/tie/loss " << cmp.method << " vs " << cmp.baseline << ": " << cmp.wins << '/'
          << cmp.ties << '/' << cmp.losses << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Atomic output

/// Writes all files to temporaries inside `dir`, then renames them into place.
/// On failure the temporaries are removed and no final file is touched.
inline void write_outputs_atomically(const std::filesystem::path& dir, const OutputFiles& files) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::vector<std::pair<fs::path, fs::path>> staged;
  try {
    for (const auto& [name, content] : files) {
      const fs::path tmp = dir / (".tmp-" + name);
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw InputError("cannot write '" + tmp.string() + "'");
      staged.emplace_back(tmp, dir / name);
      out << content;
      out.close();
      if (!out) throw InputError("failed writing '" + tmp.string() + "'");
    }
  } catch (...) {
    std::error_code ec;
    for (const auto& [tmp, final_path] : staged) fs::remove(tmp, ec);
    throw;
  }
  for (const auto& [tmp, final_path] : staged) fs::rename(tmp, final_path);
}

// ---------------------------------------------------------------------------
// Resolution

/// Merges the config file (if any) with command-line overrides. Named
/// datasets resolve to a config section of that name, to the built-in
/// Gaussian blobs for "synthetic", or to <data_dir>/<name>.libsvm.
inline RunConfig resolve_config(const CliOptions& opts) {
  namespace fs = std::filesystem;
  RunConfig cfg;
  if (opts.config) cfg = load_config(*opts.config);
  auto& ex = cfg.experiment;
  if (opts.strategies) ex.strategies = *opts.strategies;
  if (opts.trials) ex.trials = *opts.trials;
  if (opts.budget) ex.budget = *opts.budget;
  if (opts.lambda) ex.lambda = *opts.lambda;
  if (opts.seed) ex.base_seed = *opts.seed;

  if (opts.datasets) {
    std::vector<DatasetSource> chosen;
    for (const auto& name : *opts.datasets) {
      const auto it = std::find_if(cfg.datasets.begin(), cfg.datasets.end(),
                                   [&](const DatasetSource& d) { return d.name == name; });
      DatasetSource src;
      if (it != cfg.datasets.end()) {
        src = *it;
      } else if (name == "synthetic") {
        src.name = name;
        src.kind = DatasetSource::Kind::synthetic;
        src.synthetic.name = name;
      } else {
        src.name = name;
        src.path = fs::absolute(opts.data_dir / (name + ".libsvm")).lexically_normal();
      }
      chosen.push_back(std::move(src));
    }
    cfg.datasets = std::move(chosen);
  }

  ex.validate();
  if (cfg.datasets.empty()) throw ConfigError("no datasets given (use --datasets or a [dataset] section)");
  for (auto& ds : cfg.datasets) {
    if (ds.kind == DatasetSource::Kind::file) {
      ds.path = fs::absolute(ds.path).lexically_normal();
      if (!fs::is_regular_file(ds.path))
        throw ConfigError("dataset '" + ds.name + "': file not found: " + ds.path.string());
    }
  }
  return cfg;
}

/// A named failure while materializing one dataset.
class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::vector<Dataset> materialize_all(RunConfig& cfg, std::ostream& log) {
  std::vector<Dataset> out;
  for (auto& src : cfg.datasets) {
    try {
      auto [ds, checksum] = materialize(src);
      validate(ds);
      if (ds.label_remap) log << "note: dataset '" << ds.name << "': " << *ds.label_remap << '\n';
      src.checksum = checksum;
      out.push_back(std::move(ds));
    } catch (const NumericalError&) {
      throw;
    } catch (const std::exception& e) {
      throw DatasetError("dataset '" + src.name + "': " + e.what());
    }
  }
  return out;
}

inline std::string utc_timestamp(std::chrono::system_clock::time_point tp) {
  const std::time_t t = std::chrono::system_clock::to_time_t(tp);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ---------------------------------------------------------------------------
// Trace

/// Records the queried points and the per-step score table of one trial.
class TraceRecorder final : public TrialObserver {
 public:
  explicit TraceRecorder(const Dataset& raw) : raw_(raw) {
    trace_ = "step,x1,x2,true_label,score\n";
    scores_ = "step,pool_index,x1,x2,max_posterior,aggregated,selected\n";
  }

  void on_query(std::size_t step, const Dataset& /*standardized*/, const PoolState& /*before*/,
                const Model& /*base*/, const std::vector<CandidateScore>& table,
                Index chosen) override {
    double chosen_score = std::numeric_limits<double>::quiet_NaN();
    for (const auto& row : table) {
      const bool selected = row.pool_index == chosen;
      if (selected) chosen_score = row.aggregated;
      scores_ += std::to_string(step + 1) + "," + std::to_string(row.pool_index) + "," +
                 coords(row.pool_index) + "," + format_real(row.posterior.max()) + "," +
                 format_real(row.aggregated) + "," + (selected ? "1" : "0") + "\n";
    }
    trace_ += std::to_string(step + 1) + "," + coords(chosen) + "," +
              (raw_.labels[chosen] == Label::positive ? "1" : "-1") + "," + format_real(chosen_score) +
              "\n";
  }

  [[nodiscard]] const std::string& trace_csv() const noexcept { return trace_; }
  [[nodiscard]] const std::string& scores_csv() const noexcept { return scores_; }

 private:
  std::string coords(Index i) const {
    return format_real(raw_.features(static_cast<Eigen::Index>(i), 0)) + "," +
           format_real(raw_.features(static_cast<Eigen::Index>(i), 1));
  }

  const Dataset& raw_;
  std::string trace_;
  std::string scores_;
};

/// Trial 0 of the single configured strategy on the single configured 2-D
/// dataset, with the trace files as output.
inline OutputFiles trace_outputs(const RunConfig& cfg, const Dataset& ds) {
  if (cfg.datasets.size() != 1 || cfg.experiment.strategies.size() != 1)
    throw ConfigError("--trace needs exactly one dataset and one strategy");
  if (ds.dim() != 2)
    throw DatasetError("dataset '" + ds.name + "': trace needs 2-D data, got " +
                       std::to_string(ds.dim()) + " features");
  TraceRecorder recorder(ds);
  const auto spec = StrategySpec::from_name(cfg.experiment.strategies.front());
  (void)run_trial(ds, spec, cfg.experiment, 0, &recorder);
  return {{"trace.csv", recorder.trace_csv()}, {"trace_scores.csv", recorder.scores_csv()}};
}

// ---------------------------------------------------------------------------
// Entry point

/// Runs the command; returns the process exit code. Diagnostics go to `log`.
inline int run(const CliOptions& opts, std::ostream& log) {
  const auto started = std::chrono::system_clock::now();
  const auto t0 = std::chrono::steady_clock::now();
  RunConfig cfg;
  try {
    cfg = resolve_config(opts);
    cfg.experiment.threads = opts.threads ? *opts.threads : threads_from_env();
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    const auto datasets = materialize_all(cfg, log);
    OutputFiles files;
    if (opts.trace) {
      files = trace_outputs(cfg, datasets.front());
    } else {
      const auto results = run_experiment(datasets, cfg.experiment);
      for (const auto& r : results) {
        if (r.budget_clipped)
          log << "warning: " << r.dataset << "/" << r.strategy << " trial " << r.trial
              << ": budget clipped to " << r.selected.size() << " queries\n";
      }
      std::vector<std::string> order;
      for (const auto& d : datasets) order.push_back(d.name);
      const auto table = build_table(results, cfg.experiment, order);
      files["curves.csv"] = render_curves_csv(results);
      files["trials.csv"] = render_trials_csv(results);
      files["summary.csv"] = render_summary_csv(table);
      files["summary.txt"] = render_summary_text(table);
      files["pairwise.csv"] = render_pairwise_csv(table);
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const ManifestInfo info{UNCERTAL_VERSION, utc_timestamp(started), wall};
    files["manifest.txt"] = write_config(cfg, &info);
    write_outputs_atomically(opts.out, files);
    if (!opts.trace) log << files["summary.txt"];
    log << "wrote " << files.size() << " files to " << opts.out.string() << '\n';
    return kExitOk;
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DatasetError& e) {
    log << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const NumericalError& e) {
    log << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace uncertal
