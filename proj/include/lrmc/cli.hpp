// Copyright 2026 The lrmc Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "lrmc/core/error.hpp"
#include "lrmc/core/format.hpp"
#include "lrmc/experiments.hpp"
#include "lrmc/plot.hpp"
#include "lrmc/theory.hpp"

namespace lrmc::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_failure = 1;
inline constexpr int exit_usage = 2;

/// A usage problem: bad flag value, malformed config, missing field.
class usage_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CliCommand {
  std::string subcommand;  // converge, phase, timing, theory, plot
  ExperimentSpec spec;
  std::filesystem::path out = ".";
  std::size_t selectors = 4;  // theory: rows and columns each
  std::filesystem::path input;  // plot
  std::string kind;             // plot: lines or heatmap
  int verbosity = 1;
};

struct ParseResult {
  std::optional<CliCommand> command;
  int exit_code = exit_ok;  // meaningful when command is empty
  std::string message;
};

namespace detail {

inline const std::vector<std::string>& value_flags() {
  static const std::vector<std::string> names = {
      "d1",   "d2",  "r",         "p",    "kappa", "s",   "lambda",    "trials",
      "seed", "tol", "max-iters", "algs", "jobs",  "out", "selectors", "record-every",
      "input", "kind"};
  return names;
}

/// key=value lines; blank lines and lines starting with '#' are skipped.
inline std::map<std::string, std::string> read_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw usage_error("--config: cannot read '" + path.string() + "'");
  std::map<std::string, std::string> out;
  const auto& known = value_flags();
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw usage_error("--config: line " + std::to_string(lineno) + " is not key=value");
    }
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t");
      const auto b = s.find_last_not_of(" \t");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    std::string key = trim(line.substr(0, eq));
    if (key.rfind("--", 0) == 0) key = key.substr(2);
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw usage_error("--config: unknown key '" + key + "' on line " + std::to_string(lineno));
    }
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

inline double to_double(const std::string& flag, const std::string& v) {
  auto d = parse_double(v);
  if (!d || !std::isfinite(*d)) throw usage_error("--" + flag + ": '" + v + "' is not a number");
  return *d;
}

inline std::uint64_t to_uint(const std::string& flag, const std::string& v) {
  std::uint64_t out = 0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw usage_error("--" + flag + ": '" + v + "' is not a non-negative integer");
  }
  return out;
}

inline std::vector<double> to_double_list(const std::string& flag, const std::string& v) {
  std::vector<double> out;
  for (const std::string& part : split(v, ',')) out.push_back(to_double(flag, part));
  return out;
}

inline std::vector<std::size_t> to_uint_list(const std::string& flag, const std::string& v) {
  std::vector<std::size_t> out;
  for (const std::string& part : split(v, ','))
    out.push_back(static_cast<std::size_t>(to_uint(flag, part)));
  return out;
}

template <class T>
bool strictly_increasing(const std::vector<T>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i - 1] < v[i])) return false;
  return true;
}

// Fills the command from merged values, checking each flag so that errors
// name the offending flag.
inline void apply_values(CliCommand& cmd, const std::map<std::string, std::string>& values) {
  ExperimentSpec& spec = cmd.spec;
  auto get = [&](const std::string& k) -> const std::string* {
    auto it = values.find(k);
    return it == values.end() ? nullptr : &it->second;
  };
  auto positive = [](const std::string& flag, std::uint64_t v) {
    if (v == 0) throw usage_error("--" + flag + ": must be positive");
    return v;
  };
  if (auto v = get("d1")) spec.d1 = positive("d1", to_uint("d1", *v));
  if (auto v = get("d2")) spec.d2 = positive("d2", to_uint("d2", *v));
  if (auto v = get("r")) {
    spec.ranks = to_uint_list("r", *v);
    for (std::size_t r : spec.ranks) {
      if (r == 0 || r > std::min(spec.d1, spec.d2)) {
        throw usage_error("--r: rank " + std::to_string(r) + " must lie in 1..min(d1, d2) = " +
                          std::to_string(std::min(spec.d1, spec.d2)));
      }
    }
    if (!strictly_increasing(spec.ranks)) throw usage_error("--r: grid must be strictly increasing");
  }
  if (auto v = get("p")) {
    spec.rates = to_double_list("p", *v);
    for (double p : spec.rates)
      if (!(p > 0.0 && p <= 1.0)) {
        throw usage_error("--p: sampling rate must lie in (0, 1], got " + format_double(p));
      }
    if (!strictly_increasing(spec.rates)) throw usage_error("--p: grid must be strictly increasing");
  }
  if (auto v = get("kappa")) {
    spec.kappa = to_double("kappa", *v);
    if (!(spec.kappa >= 1.0)) throw usage_error("--kappa: must be >= 1");
  }
  if (auto v = get("s")) {
    spec.step = to_double("s", *v);
    if (!(spec.step > 0.0)) throw usage_error("--s: step size must be > 0");
  }
  if (auto v = get("lambda")) {
    spec.lambdas = to_double_list("lambda", *v);
    for (double l : spec.lambdas)
      if (!(l > 0.0)) throw usage_error("--lambda: must be > 0");
  }
  if (auto v = get("trials")) spec.trials = positive("trials", to_uint("trials", *v));
  if (auto v = get("seed")) spec.master_seed = to_uint("seed", *v);
  if (auto v = get("tol")) {
    spec.tol = to_double("tol", *v);
    if (!(spec.tol > 0.0)) throw usage_error("--tol: must be > 0");
  }
  if (auto v = get("max-iters")) spec.max_iters = positive("max-iters", to_uint("max-iters", *v));
  if (auto v = get("record-every"))
    spec.record_every = positive("record-every", to_uint("record-every", *v));
  if (auto v = get("jobs")) spec.jobs = positive("jobs", to_uint("jobs", *v));
  if (auto v = get("algs")) {
    spec.algorithms.clear();
    for (const std::string& name : split(*v, ',')) {
      try {
        const Algorithm a = parse_algorithm(name);
        if (std::find(spec.algorithms.begin(), spec.algorithms.end(), a) != spec.algorithms.end()) {
          throw usage_error("--algs: " + name + " listed twice");
        }
        spec.algorithms.push_back(a);
      } catch (const parameter_error& e) {
        throw usage_error(std::string("--algs: ") + e.what());
      }
    }
  }
  if (auto v = get("selectors")) cmd.selectors = static_cast<std::size_t>(to_uint("selectors", *v));
  if (auto v = get("out")) cmd.out = *v;
  if (auto v = get("input")) cmd.input = *v;
  if (auto v = get("kind")) {
    if (*v != "lines" && *v != "heatmap") throw usage_error("--kind: expected lines or heatmap");
    cmd.kind = *v;
  }
  try {
    if (cmd.subcommand != "plot") spec.validate();
  } catch (const parameter_error& e) {
    throw usage_error(e.what());
  }
  if (cmd.subcommand == "plot") {
    if (cmd.input.empty()) throw usage_error("plot: --input is required");
    if (cmd.kind.empty()) throw usage_error("plot: --kind is required");
  }
  if ((cmd.subcommand == "converge" || cmd.subcommand == "timing" || cmd.subcommand == "theory") &&
      (spec.ranks.size() != 1 || spec.rates.size() != 1)) {
    throw usage_error(cmd.subcommand + ": --r and --p take a single value");
  }
}

// Per-subcommand defaults, overridden by config values and then flags.
inline std::map<std::string, std::string> defaults_for(const std::string& sub) {
  if (sub == "phase") {
    return {{"d1", "80"},      {"d2", "60"},
            {"kappa", "3"},    {"r", "2,4,6,8,10,12"},
            {"p", "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9"},
            {"algs", "VGD"},   {"max-iters", "3000"}};
  }
  if (sub == "timing") return {{"kappa", "3"}};
  if (sub == "theory") return {{"algs", "VGD"}};
  return {};
}

}  // namespace detail

/// Parses argv. Flags override config-file values, which override
/// per-subcommand defaults; LRMC_SEED supplies the seed when neither sets it.
inline ParseResult parse_args(int argc, const char* const* argv,
                              const char* env_seed = std::getenv("LRMC_SEED")) {
  ParseResult result;
  CLI::App app{"Low-rank matrix completion by gradient descent: experiments and checks", "lrmc"};
  app.require_subcommand(1);
  const std::vector<std::pair<std::string, std::string>> subs = {
      {"converge", "convergence curves on one planted instance"},
      {"phase", "success rate over a (p, r) grid"},
      {"timing", "seconds to reach relative error 1e-8"},
      {"theory", "contraction, balancing drift and hypothesis clause checks"},
      {"plot", "render a convergence or phase CSV as SVG"}};
  struct Slot {
    std::map<std::string, std::string> values;
    std::string config;
  };
  std::map<std::string, Slot> slots;
  for (const auto& [name, help] : subs) {
    CLI::App* sc = app.add_subcommand(name, help);
    Slot& slot = slots[name];
    for (const std::string& flag : detail::value_flags()) {
      sc->add_option("--" + flag, slot.values[flag]);
    }
    sc->add_option("--config", slot.config, "key=value file with the same flag names");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    std::ostringstream os;
    app.exit(e, os, os);
    result.message = os.str();
    result.exit_code = exit_ok;
    return result;
  } catch (const CLI::ParseError& e) {
    result.message = e.what();
    result.exit_code = exit_usage;
    return result;
  }

  CliCommand cmd;
  CLI::App* chosen = app.get_subcommands().front();
  cmd.subcommand = chosen->get_name();
  Slot& slot = slots[cmd.subcommand];
  try {
    std::map<std::string, std::string> merged = detail::defaults_for(cmd.subcommand);
    if (env_seed && *env_seed) merged["seed"] = env_seed;
    if (!slot.config.empty()) {
      for (auto& [k, v] : detail::read_config(slot.config)) merged[k] = v;
    }
    for (const std::string& flag : detail::value_flags()) {
      if (chosen->count("--" + flag) > 0) merged[flag] = slot.values[flag];
    }
    detail::apply_values(cmd, merged);
  } catch (const usage_error& e) {
    result.message = e.what();
    result.exit_code = exit_usage;
    return result;
  }
  result.command = std::move(cmd);
  return result;
}

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << content;
  out.close();
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

inline std::string run_label(const std::string& algorithm, double lambda) {
  return algorithm == "RGD" ? algorithm + "_" + format_double(lambda) : algorithm;
}

inline int do_converge(const CliCommand& cmd, std::ostream& log) {
  const ConvergenceResult res = run_convergence(cmd.spec);
  std::ostringstream csv;
  write_convergence_csv(csv, res.rows);
  write_file(cmd.out / "convergence.csv", csv.str());
  nlohmann::json runs = nlohmann::json::array();
  for (const ConvergenceSummary& s : res.summaries) {
    nlohmann::json j = {{"algorithm", s.run.label()},
                        {"lambda", s.run.lambda},
                        {"status", to_string(s.status)},
                        {"iterations", s.iterations},
                        {"final_rel_err", s.final_relative_error},
                        {"seconds", s.seconds}};
    j["iters_to_1e-8"] = s.iters_to_success ? nlohmann::json(*s.iters_to_success) : nlohmann::json();
    runs.push_back(j);
    log << s.run.label() << (s.run.algorithm == Algorithm::rgd ? " lambda=" + format_double(s.run.lambda) : "")
        << ": " << to_string(s.status) << " after " << s.iterations
        << " iterations, rel_err " << format_double(s.final_relative_error) << '\n';
  }
  const nlohmann::json stats = {{"mu", res.mu}, {"kappa", res.kappa},
                                {"observed", res.observed}, {"runs", runs}};
  write_file(cmd.out / "convergence_summary.json",
             make_summary("converge", cmd.spec.to_json(), stats).dump(2) + "\n");
  return res.any_diverged() ? exit_failure : exit_ok;
}

inline int do_phase(const CliCommand& cmd, std::ostream& log) {
  const PhaseResult res = run_phase(cmd.spec);
  nlohmann::json grids = nlohmann::json::array();
  for (const PhaseGrid& g : res.grids) {
    const std::string label = run_label(g.algorithm, g.lambda);
    std::ostringstream phase_csv, contour_csv;
    write_phase_csv(phase_csv, g);
    const auto contour = extract_contour(g);
    write_contour_csv(contour_csv, contour);
    write_file(cmd.out / ("phase_" + label + ".csv"), phase_csv.str());
    write_file(cmd.out / ("contour_" + label + ".csv"), contour_csv.str());
    std::size_t total = 0;
    for (const auto& row : g.successes)
      for (std::size_t v : row) total += v;
    nlohmann::json crossings = nlohmann::json::array();
    for (const ContourPoint& cp : contour) {
      crossings.push_back({{"r", cp.r},
                           {"p_cross", cp.p_cross ? nlohmann::json(*cp.p_cross) : nlohmann::json()},
                           {"clipped", cp.clipped}});
    }
    grids.push_back({{"algorithm", g.algorithm}, {"lambda", g.lambda},
                     {"successes", total}, {"contour", crossings}});
    log << label << ": " << total << " successful trials of "
        << g.trials * g.rates.size() * g.ranks.size() << '\n';
  }
  const nlohmann::json stats = {{"grids", grids},
                                {"underdetermined_warnings", res.underdetermined_warnings}};
  write_file(cmd.out / "phase_summary.json",
             make_summary("phase", cmd.spec.to_json(), stats).dump(2) + "\n");
  return exit_ok;
}

inline int do_timing(const CliCommand& cmd, std::ostream& log) {
  const TimingResult res = run_timing(cmd.spec);
  std::ostringstream csv;
  write_timing_csv(csv, res.rows);
  write_file(cmd.out / "timing.csv", csv.str());
  nlohmann::json rows = nlohmann::json::array();
  for (const TimingRow& r : res.rows) {
    rows.push_back({{"algorithm", r.algorithm}, {"lambda", r.lambda}, {"n_ok", r.n_ok},
                    {"n_fail", r.n_fail},
                    {"mean_s", r.mean_s ? nlohmann::json(*r.mean_s) : nlohmann::json()},
                    {"median_s", r.median_s ? nlohmann::json(*r.median_s) : nlohmann::json()}});
    log << run_label(r.algorithm, r.lambda) << ": " << r.n_ok << " ok, " << r.n_fail
        << " failed, mean " << format_optional(r.mean_s) << " s\n";
  }
  write_file(cmd.out / "timing_summary.json",
             make_summary("timing", cmd.spec.to_json(), {{"rows", rows}}).dump(2) + "\n");
  return exit_ok;
}

inline int do_theory(const CliCommand& cmd, std::ostream& log) {
  const ExperimentSpec& spec = cmd.spec;
  const Instance in = make_instance(spec.d1, spec.d2, spec.rank(), spec.kappa, spec.p(),
                                    spec.master_seed, 0, 0);
  TruncatedSvdOptions svd;
  svd.seed = derive_seed(spec.master_seed, 0, Stream::sketch, 0);
  SolverConfig cfg;
  cfg.variant = AlgorithmRun{spec.algorithms.front(), spec.lambdas.front()}.variant();
  cfg.step = spec.step;
  cfg.tol = spec.tol;
  cfg.max_iters = spec.max_iters;
  cfg.record_every = spec.record_every;
  cfg.track_dist = true;
  const RecordedRun main = run_recorded(in.gt, in.mask, cfg, spectral_init(in.gt, in.mask, spec.rank(), svd));

  SolverConfig loo_cfg = cfg;
  loo_cfg.max_iters = std::max<std::size_t>(main.result.iterations, 1);
  const auto selectors = cmd.selectors == 0 ? std::vector<std::size_t>{}
                                            : default_selectors(spec.d1, spec.d2, cmd.selectors);
  const LooFamily fam = run_loo_family(in.gt, in.mask, loo_cfg, selectors, spec.jobs, svd);
  const HypothesisReport rep = hypothesis_check(main, fam, in.gt, spec.step, spec.p());
  std::ostringstream csv;
  write_hypothesis_csv(csv, rep);
  write_file(cmd.out / "hypothesis.csv", csv.str());

  const ContractionReport con = contraction_check(main.result.trace, spec.step, in.gt.sigma_min());
  const double dist0 = main.result.trace.rows.front().dist.value_or(0.0);
  const DriftReport drift = balancing_drift_check(main.result.trace, in.gt.kappa, spec.step,
                                                  in.gt.sigma_max(), dist0);
  const ConcentrationReport conc =
      concentration_check(in.mask, spec.p(), 100, derive_seed(spec.master_seed, 0, 3, 0));

  nlohmann::json clauses = nlohmann::json::object();
  for (const auto& [name, counts] : rep.by_clause())
    clauses[name] = {{"satisfied", counts.first}, {"evaluable", counts.second}};
  nlohmann::json loo = nlohmann::json::array();
  for (const LooSequence& s : fam.sequences)
    loo.push_back({{"l", s.selector.l()},
                   {"final_rel_err", s.run.result.final_relative_error},
                   {"status", to_string(s.run.result.status)}});
  const nlohmann::json stats = {
      {"main", {{"algorithm", cfg.variant.name()},
                {"status", to_string(main.result.status)},
                {"iterations", main.result.iterations},
                {"final_rel_err", main.result.final_relative_error}}},
      {"mu", in.gt.mu},
      {"contraction", {{"bound_factor", con.bound_factor}, {"worst_ratio", con.worst_ratio},
                       {"violations", con.violations}, {"satisfied", con.satisfied()}}},
      {"balancing_drift", {{"b0", drift.b0}, {"max", drift.max_b}, {"bound", drift.bound},
                           {"satisfied", drift.satisfied()}}},
      {"concentration", {{"worst_ratio", conc.worst_ratio}, {"mean_ratio", conc.mean_ratio},
                         {"trials", conc.trials}}},
      {"hypothesis", {{"fraction_satisfied", rep.fraction_satisfied()},
                      {"vacuous", rep.vacuous()}, {"clauses", clauses}}},
      {"leave_one_out", loo}};
  write_file(cmd.out / "theory_summary.json",
             make_summary("theory", spec.to_json(), stats).dump(2) + "\n");
  log << cfg.variant.name() << ": " << to_string(main.result.status) << " after "
      << main.result.iterations << " iterations; contraction worst ratio "
      << format_double(con.worst_ratio) << " (bound " << format_double(con.bound_factor)
      << "); hypothesis rows satisfied " << rep.satisfied() << "/" << rep.evaluable() << '\n';
  return main.result.status == RunStatus::diverged ? exit_failure : exit_ok;
}

inline int do_plot(const CliCommand& cmd, std::ostream& log) {
  std::ifstream in(cmd.input);
  if (!in) throw std::runtime_error("cannot read '" + cmd.input.string() + "'");
  const std::string svg = cmd.kind == "lines" ? render_lines(in) : render_heatmap(in);
  std::filesystem::path target = cmd.out;
  if (std::filesystem::is_directory(target) || target.extension() != ".svg") {
    target /= cmd.input.stem().string() + ".svg";
  }
  write_file(target, svg);
  log << "wrote " << target.string() << '\n';
  return exit_ok;
}

}  // namespace detail

/// Runs a parsed command. Output files go to cmd.out (created if needed).
inline int dispatch(const CliCommand& cmd, std::ostream& log = std::cout,
                    std::ostream& err = std::cerr) {
  try {
    if (cmd.subcommand != "plot" || cmd.out.extension() != ".svg") {
      std::filesystem::create_directories(cmd.out);
    }
    if (cmd.subcommand == "converge") return detail::do_converge(cmd, log);
    if (cmd.subcommand == "phase") return detail::do_phase(cmd, log);
    if (cmd.subcommand == "timing") return detail::do_timing(cmd, log);
    if (cmd.subcommand == "theory") return detail::do_theory(cmd, log);
    if (cmd.subcommand == "plot") return detail::do_plot(cmd, log);
    err << "lrmc: unknown subcommand '" << cmd.subcommand << "'\n";
    return exit_usage;
  } catch (const parameter_error& e) {
    err << "lrmc: " << e.what() << '\n';
    return exit_usage;
  } catch (const std::exception& e) {
    err << "lrmc: " << e.what() << '\n';
    return exit_failure;
  }
}

/// parse_args then dispatch; never throws.
inline int run_main(int argc, const char* const* argv, std::ostream& log = std::cout,
                    std::ostream& err = std::cerr) {
  try {
    ParseResult parsed = parse_args(argc, argv);
    if (!parsed.command) {
      (parsed.exit_code == exit_ok ? log : err) << parsed.message << '\n';
      return parsed.exit_code;
    }
    return dispatch(*parsed.command, log, err);
  } catch (const std::exception& e) {
    err << "lrmc: " << e.what() << '\n';
    return exit_failure;
  }
}

}  // namespace lrmc::cli
