#include "elfit/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <mutex>
#include <thread>
#include <tuple>

#include "CLI11.hpp"
#include "elfit/diagnostics.hpp"
#include "elfit/json_io.hpp"
#include "elfit/version.hpp"
#include "json.hpp"

namespace elfit {

namespace {

using nlohmann::json;

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int cell_point_count(int d, double fraction) {
  return static_cast<int>(std::llround(fraction * d * d));
}

struct TrialTask {
  int d = 0;
  int n = 0;
  double fraction = 0.0;
  int trial_index = 0;
  std::uint64_t seed = 0;
};

TrialRecord run_trial(const TrialTask& task, bool diagnostics_enabled) {
  TrialRecord rec;
  rec.d = task.d;
  rec.n = task.n;
  rec.n_fraction = task.fraction;
  rec.trial_index = task.trial_index;
  rec.seed = task.seed;

  const auto start = std::chrono::steady_clock::now();
  const PointCloud cloud = sample_cloud(task.d, task.n, task.seed);
  const FitResult fit = fit_ellipsoid(cloud);
  rec.status = fit.status;
  rec.max_residual = fit.max_residual;
  rec.q_min_eig = fit.q_min_eig;
  rec.perturbation_norm = fit.perturbation_norm;
  rec.m_min_eig = fit.m_min_eig;
  const DeviationVector eps = build_deviations(cloud);
  rec.eps_inf = eps.values.cwiseAbs().maxCoeff();
  rec.delta_inf =
      fit.delta.size() > 0 ? fit.delta.cwiseAbs().maxCoeff() : kNan;

  if (diagnostics_enabled && fit.delta.size() > 0) {
    try {
      const EventReport er =
          check_events(cloud, build_gram(cloud), eps, fit.delta);
      rec.events_checked = true;
      rec.e1 = er.e1_holds;
      rec.e2 = er.e2_holds;
      rec.e3 = er.e3_holds;
    } catch (const NotConverged&) {
      rec.events_checked = false;
    }
  }
  rec.wall_time_ms =
      std::chrono::duration<double, std::milli>(
          std::chrono::steady_clock::now() - start)
          .count();
  return rec;
}

int resolved_worker_count(const SweepConfig& config) {
  if (const char* env = std::getenv("ELLIPSOID_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1)
      throw ConfigInvalid("worker_count",
                          "ELLIPSOID_WORKERS must be a positive integer, got "
                          "\"" + std::string(env) + "\"");
    return static_cast<int>(v);
  }
  return config.worker_count;
}

json config_echo(const SweepConfig& config) {
  json c;
  c["d_values"] = config.d_values;
  c["n_fractions"] = config.n_fractions;
  c["trials_per_cell"] = config.trials_per_cell;
  c["master_seed"] = config.master_seed;
  c["diagnostics_enabled"] = config.diagnostics_enabled;
  c["output_path"] = config.output_path;
  c["worker_count"] = config.worker_count;
  return c;
}

void write_meta(const SweepConfig& config, const SweepResult& result,
                int workers_used) {
  json meta;
  meta["version"] = kVersion;
  meta["config"] = config_echo(config);
  meta["worker_count_used"] = workers_used;
  meta["total_wall_time_ms"] = result.total_wall_time_ms;
  meta["threshold_convention"] =
      "fraction where the per-d success curve first crosses 1/2 downward, "
      "linearly interpolated between scanned fractions; null when the curve "
      "never crosses";
  meta["conjectured_existence_threshold"] = 0.25;
  json estimates;
  for (int d : config.d_values) {
    const auto it = result.threshold_estimate.find(d);
    if (it == result.threshold_estimate.end())
      estimates[std::to_string(d)] = nullptr;
    else
      estimates[std::to_string(d)] = it->second;
  }
  meta["threshold_estimates"] = std::move(estimates);
  if (config.diagnostics_enabled) {
    json tallies;
    for (int d : config.d_values) {
      long long checked = 0, e1 = 0, e2 = 0, e3 = 0, trials = 0;
      for (const TrialRecord& r : result.records) {
        if (r.d != d) continue;
        ++trials;
        if (!r.events_checked) continue;
        ++checked;
        e1 += r.e1;
        e2 += r.e2;
        e3 += r.e3;
      }
      json t;
      t["trials"] = trials;
      t["events_checked"] = checked;
      t["e1_holds"] = e1;
      t["e2_holds"] = e2;
      t["e3_holds"] = e3;
      tallies[std::to_string(d)] = std::move(t);
    }
    meta["event_tallies"] = std::move(tallies);
  }
  const std::string path = config.output_path + ".meta.json";
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << meta.dump(1, '\t') << '\n';
  if (!out) throw IoError("short write to " + path);
}

}  // namespace

void validate_config(const SweepConfig& config) {
  if (config.d_values.empty())
    throw ConfigInvalid("d_values", "d_values must not be empty");
  for (int d : config.d_values)
    if (d < 5)
      throw ConfigInvalid("d_values", "every d must be >= 5, got " +
                                          std::to_string(d));
  if (config.n_fractions.empty())
    throw ConfigInvalid("n_fractions", "n_fractions must not be empty");
  for (double f : config.n_fractions)
    if (!(f > 0.0 && f <= 0.5))
      throw ConfigInvalid("n_fractions", "every fraction must lie in (0, "
                                         "0.5], got " + fmt17(f));
  if (config.trials_per_cell < 1)
    throw ConfigInvalid("trials_per_cell", "trials_per_cell must be >= 1");
  if (config.worker_count < 1)
    throw ConfigInvalid("worker_count", "worker_count must be >= 1");
  for (int d : config.d_values)
    for (double f : config.n_fractions) {
      const int n = cell_point_count(d, f);
      const std::string cell =
          "cell d=" + std::to_string(d) + ", fraction=" + fmt17(f);
      if (n < 1)
        throw ConfigInvalid("n_fractions", cell + " yields n = 0");
      if (n > 20000)
        throw ConfigInvalid("n_fractions",
                            cell + " yields n = " + std::to_string(n) +
                                " beyond the 2e4 memory guard");
      if (n >= d * (d + 1) / 2)
        throw ConfigInvalid("n_fractions",
                            cell + " yields n = " + std::to_string(n) +
                                " >= d(d+1)/2; no exact fit can exist there");
    }
}

SweepConfig load_sweep_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw IoError(path + ": " + e.what());
  }
  const auto need = [&](const char* key) -> const json& {
    if (!doc.contains(key))
      throw ConfigInvalid(key, std::string("missing field \"") + key + "\"");
    return doc[key];
  };
  SweepConfig cfg;
  try {
    cfg.d_values = need("d_values").get<std::vector<int>>();
    cfg.n_fractions = need("n_fractions").get<std::vector<double>>();
    cfg.trials_per_cell = need("trials_per_cell").get<int>();
    cfg.master_seed = need("master_seed").get<std::uint64_t>();
    if (doc.contains("diagnostics_enabled"))
      cfg.diagnostics_enabled = doc["diagnostics_enabled"].get<bool>();
    if (doc.contains("output_path"))
      cfg.output_path = doc["output_path"].get<std::string>();
    if (doc.contains("worker_count"))
      cfg.worker_count = doc["worker_count"].get<int>();
  } catch (const json::exception& e) {
    throw ConfigInvalid("(type)", path + ": " + e.what());
  }
  for (const auto& [key, value] : doc.items()) {
    (void)value;
    static const char* known[] = {"d_values",    "n_fractions",
                                  "trials_per_cell", "master_seed",
                                  "diagnostics_enabled", "output_path",
                                  "worker_count"};
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ConfigInvalid(key, "unknown config field \"" + key + "\"");
  }
  return cfg;
}

std::string trial_csv_header() {
  return "d,n,n_fraction,trial_index,seed,status,max_residual,q_min_eig,"
         "perturbation_norm,m_min_eig,eps_inf,delta_inf,wall_time_ms";
}

std::string trial_csv_row(const TrialRecord& r) {
  std::string row;
  row += std::to_string(r.d);
  row += ',';
  row += std::to_string(r.n);
  row += ',';
  row += fmt17(r.n_fraction);
  row += ',';
  row += std::to_string(r.trial_index);
  row += ',';
  row += std::to_string(r.seed);
  row += ',';
  row += fit_status_name(r.status);
  for (double v : {r.max_residual, r.q_min_eig, r.perturbation_norm,
                   r.m_min_eig, r.eps_inf, r.delta_inf, r.wall_time_ms}) {
    row += ',';
    row += fmt17(v);
  }
  return row;
}

SweepResult run_sweep(const SweepConfig& config) {
  validate_config(config);
  const int workers = resolved_worker_count(config);
  const auto sweep_start = std::chrono::steady_clock::now();

  const int f_count = static_cast<int>(config.n_fractions.size());
  const int t_count = config.trials_per_cell;
  std::vector<TrialTask> tasks;
  tasks.reserve(config.d_values.size() * f_count * t_count);
  for (int di = 0; di < static_cast<int>(config.d_values.size()); ++di)
    for (int fi = 0; fi < f_count; ++fi)
      for (int t = 0; t < t_count; ++t) {
        TrialTask task;
        task.d = config.d_values[di];
        task.fraction = config.n_fractions[fi];
        task.n = cell_point_count(task.d, task.fraction);
        task.trial_index = t;
        const std::uint64_t ordinal =
            (static_cast<std::uint64_t>(di) * f_count + fi) * t_count + t;
        task.seed = derive_trial_seed(config.master_seed, ordinal);
        tasks.push_back(task);
      }

  SweepResult result;
  result.records.resize(tasks.size());

  std::ofstream sink;
  std::mutex sink_mutex;
  if (!config.output_path.empty()) {
    sink.open(config.output_path, std::ios::trunc);
    if (!sink)
      throw IoError("cannot open " + config.output_path + " for writing");
    sink << trial_csv_header() << '\n';
    sink.flush();
  }

  std::atomic<std::size_t> next{0};
  std::mutex failure_mutex;
  std::exception_ptr failure;
  const auto work = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) break;
      {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (failure) break;
      }
      try {
        TrialRecord rec = run_trial(tasks[i], config.diagnostics_enabled);
        if (sink.is_open()) {
          std::lock_guard<std::mutex> lock(sink_mutex);
          sink << trial_csv_row(rec) << '\n';
          sink.flush();
        }
        result.records[i] = std::move(rec);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        break;
      }
    }
  };

  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (std::thread& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);

  std::sort(result.records.begin(), result.records.end(),
            [](const TrialRecord& a, const TrialRecord& b) {
              return std::tie(a.d, a.n, a.n_fraction, a.trial_index) <
                     std::tie(b.d, b.n, b.n_fraction, b.trial_index);
            });

  std::map<std::pair<int, double>, std::pair<long long, long long>> counts;
  for (const TrialRecord& r : result.records) {
    auto& c = counts[{r.d, r.n_fraction}];
    ++c.first;
    c.second += r.status == FitStatus::Success;
  }
  for (const auto& [key, c] : counts)
    result.cell_success_rate[key] =
        static_cast<double>(c.second) / static_cast<double>(c.first);

  for (int d : config.d_values)
    if (const auto th = estimate_threshold(result, d))
      result.threshold_estimate[d] = *th;

  result.total_wall_time_ms =
      std::chrono::duration<double, std::milli>(
          std::chrono::steady_clock::now() - sweep_start)
          .count();

  if (sink.is_open()) {
    sink.close();
    std::ofstream out(config.output_path, std::ios::trunc);
    if (!out)
      throw IoError("cannot rewrite " + config.output_path);
    out << trial_csv_header() << '\n';
    for (const TrialRecord& r : result.records)
      out << trial_csv_row(r) << '\n';
    out.flush();
    if (!out) throw IoError("short write to " + config.output_path);
    write_meta(config, result, workers);
  }
  return result;
}

std::optional<double> estimate_threshold(const SweepResult& result, int d) {
  std::vector<std::pair<double, double>> curve;  // fraction -> success rate
  for (const auto& [key, rate] : result.cell_success_rate)
    if (key.first == d) curve.emplace_back(key.second, rate);
  if (curve.empty())
    throw UnknownDimension("dimension " + std::to_string(d) +
                           " is not present in the sweep");
  std::sort(curve.begin(), curve.end());
  for (std::size_t k = 0; k + 1 < curve.size(); ++k) {
    const auto [f0, r0] = curve[k];
    const auto [f1, r1] = curve[k + 1];
    if (r0 >= 0.5 && r1 < 0.5)
      return f0 + (r0 - 0.5) * (f1 - f0) / (r0 - r1);
  }
  return std::nullopt;
}

namespace {

json fit_json(const PointCloud& cloud, const FitResult& fit) {
  json doc;
  doc["d"] = cloud.d;
  doc["n"] = cloud.n;
  doc["seed"] = cloud.seed;
  doc["status"] = fit_status_name(fit.status);
  doc["max_residual"] = fit.max_residual;
  doc["q_min_eig"] = fit.q_min_eig;
  doc["perturbation_norm"] = fit.perturbation_norm;
  doc["m_min_eig"] = fit.m_min_eig;
  return doc;
}

void print_fit_text(std::ostream& os, const PointCloud& cloud,
                    const FitResult& fit) {
  os << "d: " << cloud.d << "\nn: " << cloud.n << "\nseed: " << cloud.seed
     << "\nstatus: " << fit_status_name(fit.status)
     << "\nmax_residual: " << fmt17(fit.max_residual)
     << "\nq_min_eig: " << fmt17(fit.q_min_eig)
     << "\nperturbation_norm: " << fmt17(fit.perturbation_norm)
     << "\nm_min_eig: " << fmt17(fit.m_min_eig) << "\n";
}

SymMatrix assemble_q(const PointCloud& cloud, const Eigen::VectorXd& delta) {
  SymMatrix q = perturbation(cloud, delta);
  for (int i = 0; i < q.order(); ++i) q.at(i, i) += 1.0;
  return q;
}

json tail_json(const TailEstimate& te) {
  json doc;
  doc["sample_count"] = te.sample_count;
  doc["thresholds"] = te.thresholds;
  doc["empirical_tail"] = te.empirical_tail;
  doc["fitted_psi1"] = te.fitted_psi1;
  doc["fitted_psi2"] = te.fitted_psi2;
  return doc;
}

int do_fit(int d, int n, std::uint64_t seed, const std::string& emit_q,
           const std::string& cloud_out, bool as_json) {
  const PointCloud cloud = sample_cloud(d, n, seed);
  if (!cloud_out.empty()) save_cloud(cloud, cloud_out);
  const FitResult fit = fit_ellipsoid(cloud);
  if (as_json)
    std::cout << fit_json(cloud, fit).dump(1, '\t') << '\n';
  else
    print_fit_text(std::cout, cloud, fit);
  if (!emit_q.empty()) {
    if (fit.delta.size() > 0) {
      save_q_matrix(assemble_q(cloud, fit.delta), emit_q);
    } else {
      std::cerr << "no Q available (status " << fit_status_name(fit.status)
                << "); nothing written to " << emit_q << "\n";
    }
  }
  return fit.status == FitStatus::Success ? 0 : 2;
}

int do_diagnose(int d, int n, std::uint64_t seed, long long samples,
                bool as_json) {
  const PointCloud cloud = sample_cloud(d, n, seed);
  const FitResult fit = fit_ellipsoid(cloud);

  std::optional<EventReport> events;
  if (fit.delta.size() > 0) {
    const SymMatrix m = build_gram(cloud);
    const DeviationVector eps = build_deviations(cloud);
    events = check_events(cloud, m, eps, fit.delta);
  }

  Eigen::VectorXd probe = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d) * d);
  probe[1] = probe[d] = 1.0 / std::sqrt(2.0);  // (e1 (x) e2 + e2 (x) e1) / sqrt(2)
  const TailEstimate eps_te = epsilon_tail(d, samples, derive_trial_seed(seed, 1));
  const TailEstimate tensor_te =
      tensor_tail(d, samples, probe, derive_trial_seed(seed, 2));

  if (as_json) {
    json doc;
    doc["fit"] = fit_json(cloud, fit);
    if (events) {
      json ev;
      ev["e1_holds"] = events->e1_holds;
      ev["m_min_eig"] = events->m_min_eig;
      ev["m_inv_norm"] = events->m_inv_norm;
      ev["m_dev_norm"] = events->m_dev_norm;
      ev["e2_holds"] = events->e2_holds;
      ev["eps_inf"] = events->eps_inf;
      ev["e3_holds"] = events->e3_holds;
      ev["delta_inf"] = events->delta_inf;
      ev["thresholds_used"] = {
          {"m_inv_norm_bound", events->thresholds_used.m_inv_norm_bound},
          {"c2", events->thresholds_used.c2},
          {"c3", events->thresholds_used.c3}};
      doc["events"] = std::move(ev);
    } else {
      doc["events"] = nullptr;
    }
    doc["epsilon_tail"] = tail_json(eps_te);
    doc["tensor_tail"] = tail_json(tensor_te);
    std::cout << doc.dump(1, '\t') << '\n';
  } else {
    print_fit_text(std::cout, cloud, fit);
    if (events) {
      std::cout << "e1_holds: " << (events->e1_holds ? "true" : "false")
                << " (m_inv_norm " << fmt17(events->m_inv_norm)
                << ", m_dev_norm " << fmt17(events->m_dev_norm) << ")\n"
                << "e2_holds: " << (events->e2_holds ? "true" : "false")
                << " (eps_inf " << fmt17(events->eps_inf) << ")\n"
                << "e3_holds: " << (events->e3_holds ? "true" : "false")
                << " (delta_inf " << fmt17(events->delta_inf) << ")\n";
    } else {
      std::cout << "events: unavailable (no dual weights)\n";
    }
    std::cout << "epsilon_tail fitted_psi1: " << fmt17(eps_te.fitted_psi1)
              << " fitted_psi2: " << fmt17(eps_te.fitted_psi2) << "\n"
              << "tensor_tail fitted_psi1: " << fmt17(tensor_te.fitted_psi1)
              << " fitted_psi2: " << fmt17(tensor_te.fitted_psi2) << "\n";
  }
  return fit.status == FitStatus::Success ? 0 : 2;
}

int do_verify(const std::string& cloud_path, const std::string& q_path) {
  const PointCloud cloud = load_cloud(cloud_path);
  const SymMatrix q = load_q_matrix(q_path);
  const VerifyResult v = verify(cloud, q);
  const bool pass = v.max_residual <= kResidualPass && v.min_eig >= -kPsdPass;
  std::cout << "max_residual: " << fmt17(v.max_residual)
            << "\nmin_eig: " << fmt17(v.min_eig)
            << "\nresult: " << (pass ? "pass" : "fail") << "\n";
  return pass ? 0 : 2;
}

int do_sweep(const std::string& config_path, const std::string& out_path) {
  SweepConfig cfg = load_sweep_config(config_path);
  if (!out_path.empty()) cfg.output_path = out_path;
  if (cfg.output_path.empty())
    throw ConfigInvalid("output_path",
                        "no output path: set it in the config or pass --out");
  const SweepResult result = run_sweep(cfg);
  long long successes = 0;
  for (const TrialRecord& r : result.records)
    successes += r.status == FitStatus::Success;
  std::cout << "trials: " << result.records.size()
            << "\nsuccesses: " << successes << "\n";
  for (int d : cfg.d_values) {
    const auto it = result.threshold_estimate.find(d);
    std::cout << "threshold[d=" << d << "]: ";
    if (it == result.threshold_estimate.end())
      std::cout << "undefined (no 1/2 crossing)";
    else
      std::cout << fmt17(it->second);
    std::cout << " (conjectured existence threshold 0.25)\n";
  }
  std::cout << "csv: " << cfg.output_path << "\nmeta: " << cfg.output_path
            << ".meta.json\n";
  return 0;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"identity-perturbation ellipsoid fitting laboratory"};
  app.require_subcommand(1);

  int d = 0, n = 0;
  std::uint64_t seed = 0;
  std::string emit_q, cloud_out, config_path, out_path, cloud_path, q_path;
  bool as_json = false;
  long long samples = 20000;

  CLI::App* fit_cmd =
      app.add_subcommand("fit", "sample a cloud and fit one ellipsoid");
  fit_cmd->add_option("-d", d, "ambient dimension")->required();
  fit_cmd->add_option("-n", n, "point count")->required();
  fit_cmd->add_option("--seed", seed, "cloud seed (default 0)");
  fit_cmd->add_option("--emit-q", emit_q, "write fitted Q as JSON");
  fit_cmd->add_option("--cloud-out", cloud_out, "write sampled cloud as JSON");
  fit_cmd->add_flag("--json", as_json, "machine-readable output");

  CLI::App* sweep_cmd =
      app.add_subcommand("sweep", "run a phase sweep from a JSON config");
  sweep_cmd->add_option("--config", config_path, "sweep config JSON")
      ->required();
  sweep_cmd->add_option("--out", out_path,
                        "output CSV path (overrides config output_path)");

  CLI::App* diag_cmd = app.add_subcommand(
      "diagnose", "fit one instance and report events and tail estimates");
  diag_cmd->add_option("-d", d, "ambient dimension")->required();
  diag_cmd->add_option("-n", n, "point count")->required();
  diag_cmd->add_option("--seed", seed, "cloud seed (default 0)");
  diag_cmd->add_option("--samples", samples,
                       "Monte Carlo samples for tail estimates");
  diag_cmd->add_flag("--json", as_json, "machine-readable output");

  CLI::App* verify_cmd = app.add_subcommand(
      "verify", "recheck certificates for a stored cloud and Q"
                " (exit 0 iff both pass)");
  verify_cmd->add_option("--cloud", cloud_path, "cloud JSON path")->required();
  verify_cmd->add_option("--q", q_path, "Q matrix JSON path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (fit_cmd->parsed()) return do_fit(d, n, seed, emit_q, cloud_out, as_json);
    if (sweep_cmd->parsed()) return do_sweep(config_path, out_path);
    if (diag_cmd->parsed()) return do_diagnose(d, n, seed, samples, as_json);
    if (verify_cmd->parsed()) return do_verify(cloud_path, q_path);
  } catch (const ConfigInvalid& e) {
    std::cerr << "config error in field \"" << e.field() << "\": " << e.what()
              << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace elfit
