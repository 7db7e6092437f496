// stlagc: check, run, monitor and plot funnel-controlled STL scenarios.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>
#include <spdlog/sinks/stdout_color_sinks.h>

#include "stlagc/stlagc.hpp"

namespace fs = std::filesystem;
using stlagc::json;

namespace {

constexpr int kFail = 1;
constexpr int kError = 2;

std::mutex out_mutex;

void emit(const json& j) {
  std::lock_guard<std::mutex> lock(out_mutex);
  std::cout << j.dump(2) << '\n';
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream os(path);
  if (!os) throw stlagc::Error("cannot write " + path.string());
  os << j.dump(2) << '\n';
}

/// Runs fn over every input, at most `jobs` at a time; returns the worst exit code.
template <class Fn>
int batch(const std::vector<std::string>& inputs, int jobs, Fn fn) {
  auto guarded = [&](const std::string& in) {
    try {
      return fn(in);
    } catch (const stlagc::ScenarioError& e) {
      spdlog::error("{}: {} (at {})", in, e.what(), e.pointer());
    } catch (const std::exception& e) {
      spdlog::error("{}: {}", in, e.what());
    }
    return kError;
  };
  int worst = 0;
  const auto width = static_cast<std::size_t>(std::max(1, jobs));
  for (std::size_t b = 0; b < inputs.size(); b += width) {
    std::vector<std::future<int>> running;
    for (std::size_t k = b; k < std::min(inputs.size(), b + width); ++k)
      running.push_back(std::async(width == 1 ? std::launch::deferred : std::launch::async, guarded, inputs[k]));
    for (auto& f : running) worst = std::max(worst, f.get());
  }
  return worst;
}

struct Flags {
  std::optional<double> dt;
  std::optional<double> horizon;
  std::optional<int> stride;
  std::optional<double> eps;
  std::optional<double> delta;
  std::string out;
  std::string design_report;
  unsigned seed = 0;
  int jobs = 1;
};

stlagc::RunOptions run_options(const Flags& f) { return {f.dt, f.horizon, f.stride, f.eps, f.delta}; }

int cmd_check(const std::string& path, const Flags& f) {
  const auto sc = stlagc::load_scenario_file(path);
  const auto design = stlagc::prepare(sc);
  const json report = stlagc::check_json(sc, design);
  if (!f.design_report.empty()) write_json(f.design_report, stlagc::design_json(design));
  emit(report);
  for (const auto& e : design.errors) spdlog::error("{}", e);
  const auto& warnings = design.assumptions.warnings;
  for (std::size_t k = 0; k < warnings.size(); ++k) {
    if (k == 5 && spdlog::get_level() > spdlog::level::debug) {
      spdlog::warn("{} more warnings (STLAGC_LOG=debug lists them)", warnings.size() - k);
      break;
    }
    spdlog::warn("{}", warnings[k]);
  }
  return design.pass() ? 0 : kFail;
}

fs::path csv_target(const std::string& scenario, const stlagc::Scenario& sc, const Flags& f, bool many) {
  const std::string stem = sc.name.empty() ? fs::path(scenario).stem().string() : sc.name;
  if (!f.out.empty()) return many ? fs::path(f.out) / (stem + ".csv") : fs::path(f.out);
  if (!sc.csv_out.empty()) return sc.csv_out;
  return stem + ".csv";
}

int cmd_run(const std::string& path, const Flags& f, bool many) {
  const auto sc = stlagc::load_scenario_file(path);
  spdlog::info("{}: {} agents", path, sc.system.size());
  const auto res = stlagc::run_scenario(sc, run_options(f));
  const auto& traj = res.trajectory;
  spdlog::info("{}: {} samples in {:.3f} s", path, traj.samples(), res.wall_seconds);
  if (traj.clamp_events > 0) spdlog::warn("{}: {} clamp events", path, traj.clamp_events);
  if (traj.clipped_inputs > 0) spdlog::warn("{}: {} clipped inputs", path, traj.clipped_inputs);
  for (const auto& ev : traj.events) spdlog::debug("t={} agent={} {} e_hat={}", ev.t, ev.agent, ev.kind, ev.e_hat);

  const fs::path csv = csv_target(path, sc, f, many);
  if (csv.has_parent_path()) fs::create_directories(csv.parent_path());
  stlagc::export_csv(traj, csv.string());
  const json verdict = stlagc::verdict_json(sc, res.evaluation);
  fs::path vpath = sc.verdict_out.empty() || !f.out.empty() ? fs::path(csv).replace_extension(".verdict.json")
                                                            : fs::path(sc.verdict_out);
  write_json(vpath, verdict);
  if (!f.design_report.empty()) {
    fs::path dr = many ? fs::path(f.design_report) / (fs::path(csv).stem().string() + ".design.json")
                       : fs::path(f.design_report);
    write_json(dr, stlagc::design_json(res.design));
  }
  json summary{{"scenario", sc.name},
               {"csv", csv.string()},
               {"verdict", vpath.string()},
               {"samples", traj.samples()},
               {"clamp_events", traj.clamp_events},
               {"clipped_inputs", traj.clipped_inputs},
               {"wall_seconds", res.wall_seconds},
               {"pass", res.pass()}};
  emit(summary);
  return res.pass() ? 0 : kFail;
}

int cmd_monitor(const std::string& csv, const std::string& scenario, const Flags& f) {
  const auto sc = stlagc::load_scenario_file(scenario);
  const auto design = stlagc::prepare(sc);
  if (!design.designed()) throw stlagc::DesignError("funnel design failed for " + scenario);
  const auto table = stlagc::import_csv(csv);
  const auto traj = stlagc::trajectory_from_csv(design, sc.system, table);
  const double dt = f.dt ? *f.dt : sc.sim.dt;
  const double eps = f.eps ? *f.eps : stlagc::default_eps(design);
  const double delta = f.delta ? *f.delta : stlagc::default_delta(dt, traj.dt);
  const auto ev = stlagc::evaluate(design, sc.system, traj, eps, delta);
  const json verdict = stlagc::verdict_json(sc, ev);
  if (!f.out.empty()) write_json(f.out, verdict);
  emit(verdict);
  return ev.pass() ? 0 : kFail;
}

int cmd_plotdata(const std::string& csv, int task, const Flags& f) {
  const auto table = stlagc::import_csv(csv);
  const std::string id = std::to_string(task);
  if (!table.find("rho_" + id)) throw stlagc::PreconditionError("no task for agent " + id + " in " + csv);
  const auto& t = table.column("t");
  const auto& rho = table.column("rho_" + id);
  const auto& lo = table.column("lower_" + id);
  const auto& up = table.column("upper_" + id);
  std::ofstream file;
  if (!f.out.empty()) {
    file.open(f.out);
    if (!file) throw stlagc::Error("cannot write " + f.out);
  }
  std::ostream& os = f.out.empty() ? std::cout : file;
  os << "t,rho,lower,upper\n";
  for (std::size_t k = 0; k < t.size(); ++k)
    os << stlagc::format_number(t[k]) << ',' << stlagc::format_number(rho[k]) << ','
       << stlagc::format_number(lo[k]) << ',' << stlagc::format_number(up[k]) << '\n';
  return 0;
}

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("stlagc");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* lvl = std::getenv("STLAGC_LOG")) spdlog::set_level(spdlog::level::from_str(lvl));
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Funnel-based STL controllers for coupled multi-agent systems"};
  app.require_subcommand(1);
  Flags f;

  auto sim_flags = [&f](CLI::App* cmd) {
    cmd->add_option("--dt", f.dt, "integration step");
    cmd->add_option("--horizon", f.horizon, "simulated time");
    cmd->add_option("--stride", f.stride, "record every n-th step");
  };
  auto monitor_flags = [&f](CLI::App* cmd) {
    cmd->add_option("--eps", f.eps, "assumption expansion (default 0.05 min gamma_inf)");
    cmd->add_option("--delta", f.delta, "uniform-strong shift (default 10 dt)");
  };

  std::vector<std::string> scenarios;
  auto* check = app.add_subcommand("check", "validate assumptions, design funnels, certify the composition");
  check->add_option("scenario", scenarios, "scenario JSON")->required()->check(CLI::ExistingFile);
  check->add_option("--design-report", f.design_report, "write designed funnel parameters");
  check->add_option("--jobs", f.jobs, "scenarios processed concurrently");
  check->add_option("--seed", f.seed, "reserved");

  auto* run = app.add_subcommand("run", "simulate the closed loop and monitor every contract");
  run->add_option("scenario", scenarios, "scenario JSON")->required()->check(CLI::ExistingFile);
  sim_flags(run);
  monitor_flags(run);
  run->add_option("--out", f.out, "trajectory CSV (a directory for several scenarios)");
  run->add_option("--design-report", f.design_report, "write designed funnel parameters");
  run->add_option("--jobs", f.jobs, "scenarios processed concurrently");
  run->add_option("--seed", f.seed, "reserved");

  std::string csv;
  std::string scenario;
  auto* monitor = app.add_subcommand("monitor", "re-check a recorded trajectory");
  monitor->add_option("csv", csv, "trajectory CSV")->required()->check(CLI::ExistingFile);
  monitor->add_option("scenario", scenario, "scenario JSON")->required()->check(CLI::ExistingFile);
  monitor->add_option("--dt", f.dt, "integration step of the recorded run");
  monitor_flags(monitor);
  monitor->add_option("--out", f.out, "verdict JSON");

  int task = 0;
  auto* plot = app.add_subcommand("plotdata", "emit t, rho, lower, upper of one task");
  plot->add_option("csv", csv, "trajectory CSV")->required()->check(CLI::ExistingFile);
  plot->add_option("task", task, "agent id of the task")->required();
  plot->add_option("--out", f.out, "output CSV (default stdout)");

  CLI11_PARSE(app, argc, argv);

  if (*check) return batch(scenarios, f.jobs, [&](const std::string& s) { return cmd_check(s, f); });
  if (*run) {
    const bool many = scenarios.size() > 1;
    if (many && !f.out.empty()) fs::create_directories(f.out);
    if (many && !f.design_report.empty()) fs::create_directories(f.design_report);
    return batch(scenarios, f.jobs, [&](const std::string& s) { return cmd_run(s, f, many); });
  }
  if (*monitor) return batch({csv}, 1, [&](const std::string&) { return cmd_monitor(csv, scenario, f); });
  return batch({csv}, 1, [&](const std::string&) { return cmd_plotdata(csv, task, f); });
}
