#pragma once

// Command-line front end: gen, identify, oracle, verify, profile, bench.
//
// Exit codes: 0 success, 2 configuration or usage error, 3 malformed or
// structurally invalid trace, 4 verification failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ipi/analyzer.hpp"
#include "ipi/error.hpp"
#include "ipi/identifier.hpp"
#include "ipi/legacy.hpp"
#include "ipi/oracle.hpp"
#include "ipi/simulator.hpp"
#include "ipi/trace_model.hpp"

namespace ipi::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kBadTrace = 3, kMismatch = 4 };

namespace detail {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError("cannot write '" + path + "'");
  return out;
}

inline nlohmann::json read_json(const std::string& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& ex) {
    throw Error(Errc::ConfigInvalid, path + ": " + ex.what());
  }
}

inline bool wants_json(const std::string& path) {
  return std::filesystem::path(path).extension() == ".json";
}

inline std::vector<std::uint64_t> parse_lengths(const std::string& csv) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto v = ipi::detail::parse_uint<std::uint64_t>(item);
    if (!v || *v == 0) throw UsageError("--lengths: '" + item + "' is not a positive integer");
    out.push_back(*v);
  }
  if (out.empty()) throw UsageError("--lengths: no values");
  return out;
}

inline std::uint64_t count_instances(std::span<const Label> labels) {
  std::uint64_t max_id = 0;
  for (const auto& l : labels) max_id = std::max(max_id, l.inst.id);
  return max_id;
}

inline void print_diffs(std::ostream& os, const std::string& what,
                        std::span<const LabelDiff> diffs, std::span<const LabeledEvent> trace) {
  constexpr std::size_t kShown = 20;
  os << what << ": " << diffs.size() << " differing event(s)\n";
  for (std::size_t i = 0; i < diffs.size() && i < kShown; ++i) {
    const auto& d = diffs[i];
    os << "  seq=" << d.seq << ' ' << to_string(trace[d.seq].event.kind());
    if (!trace[d.seq].event.task().empty()) os << " task=" << trace[d.seq].event.task();
    os << ' ' << to_string(d.a) << " != " << to_string(d.b) << '\n';
  }
  if (diffs.size() > kShown) os << "  ...\n";
}

}  // namespace detail

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Interrupt procedure instance identification toolkit"};
  app.require_subcommand(1);

  std::string config_path, script_name, out_path, in_path, algo_name = "new", lengths_csv;
  std::optional<std::uint64_t> seed;
  int repetitions = 5;

  auto* gen = app.add_subcommand("gen", "Generate a trace with ground-truth labels");
  auto* gen_cfg = gen->add_option("--config,-c", config_path, "Simulator config (JSON)");
  auto* gen_script = gen->add_option("--script", script_name, "fig1a, fig1b, or a scenario JSON file");
  gen_cfg->excludes(gen_script);
  gen->add_option("--seed", seed, "Override the config seed");
  gen->add_option("-o", out_path, "Output trace")->required();

  auto* identify = app.add_subcommand("identify", "Label a trace with instance identities");
  identify->add_option("input", in_path, "Input trace")->required();
  identify->add_option("--algo", algo_name, "new or legacy")
      ->check(CLI::IsMember({"new", "legacy"}));
  identify->add_option("-o", out_path, "Output labeled trace")->required();

  auto* oracle = app.add_subcommand("oracle", "Label a drained trace offline");
  oracle->add_option("input", in_path, "Input trace")->required();
  oracle->add_option("-o", out_path, "Output labeled trace")->required();

  auto* verify = app.add_subcommand("verify", "Check identifier, oracle and truth agree");
  verify->add_option("input", in_path, "Trace with truth labels")->required();
  verify->add_option("--algo", algo_name, "new or legacy")->check(CLI::IsMember({"new", "legacy"}));

  auto* prof = app.add_subcommand("profile", "Per-instance profile of a labeled trace");
  prof->add_option("input", in_path, "Labeled trace")->required();
  prof->add_option("-o", out_path, "Output (.json for JSON, CSV otherwise)")->required();

  auto* bench_cmd = app.add_subcommand("bench", "Overhead benchmark, new vs legacy");
  bench_cmd->add_option("--config,-c", config_path, "Simulator config (JSON)")->required();
  bench_cmd->add_option("--lengths", lengths_csv, "Comma-separated horizons")->required();
  bench_cmd->add_option("--seed", seed, "Override the config seed");
  bench_cmd->add_option("--reps", repetitions, "Timing repetitions")->check(CLI::PositiveNumber);
  bench_cmd->add_option("-o", out_path, "Output (.json for JSON, CSV otherwise)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& ex) {
    err << "error: " << ex.what() << '\n';
    return kUsage;
  }

  const Algo algo = algo_name == "legacy" ? Algo::Legacy : Algo::New;
  auto load_trace = [&]() {
    std::istringstream in(detail::read_file(in_path));
    return parse_labeled_trace(in);
  };
  auto label_with = [](Algo a, std::span<const Event> events, std::ostream* metrics_out) {
    if (a == Algo::New) {
      Identifier state;
      auto labels = run(events, state);
      if (metrics_out) *metrics_out << to_json(state_metrics(state)) << '\n';
      return labels;
    }
    LegacyIdentifier state;
    auto labels = legacy_run(events, state);
    if (metrics_out) *metrics_out << to_json(state_metrics(state)) << '\n';
    return labels;
  };

  try {
    if (*gen) {
      std::vector<LabeledEvent> trace;
      if (!script_name.empty()) {
        auto scenario = builtin_scenario(script_name);
        if (!scenario) {
          if (!std::filesystem::is_regular_file(script_name))
            throw detail::UsageError("unknown script '" + script_name + "'");
          scenario = scenario_from_json(detail::read_json(script_name));
        }
        trace = script(*scenario);
      } else if (!config_path.empty()) {
        auto cfg = sim_config_from_json(detail::read_json(config_path));
        if (seed) cfg.seed = *seed;
        trace = simulate(cfg);
      } else {
        throw detail::UsageError("gen needs --config or --script");
      }
      auto os = detail::open_output(out_path);
      write_trace(os, trace, false);
      out << "events: " << trace.size() << '\n';
      return kOk;
    }

    if (*identify || *oracle) {
      auto trace = load_trace();
      auto events = events_of(trace);
      std::vector<Label> labels;
      std::ostringstream metrics;
      labels = *identify ? label_with(algo, events, &metrics) : label_offline(events);
      for (std::size_t i = 0; i < trace.size(); ++i) trace[i].label = labels[i];
      auto os = detail::open_output(out_path);
      write_trace(os, trace, true);
      out << "instances: " << detail::count_instances(labels) << '\n';
      if (*identify) out << "metrics: " << metrics.str();
      return kOk;
    }

    if (*verify) {
      auto trace = load_trace();
      auto truth = truth_of(trace);
      if (!truth) throw detail::UsageError("verify needs a trace with truth labels");
      auto events = events_of(trace);
      auto identified = label_with(algo, events, nullptr);
      auto offline = label_offline(events);

      bool ok = true;
      auto compare = [&](const std::string& what, std::span<const Label> a, std::span<const Label> b) {
        auto diffs = diff_labels(a, b);
        if (diffs.empty()) return;
        ok = false;
        detail::print_diffs(err, what, diffs, trace);
      };
      compare(std::string(to_string(algo)) + " identifier vs truth", identified, *truth);
      compare("oracle vs truth", offline, *truth);
      if (std::all_of(trace.begin(), trace.end(), [](const auto& le) { return le.label.has_value(); })) {
        std::vector<Label> stored;
        for (const auto& le : trace) stored.push_back(*le.label);
        compare("stored labels vs truth", stored, *truth);
      }
      if (!ok) return kMismatch;
      out << "verified: " << trace.size() << " events, "
          << detail::count_instances(*truth) << " instances\n";
      return kOk;
    }

    if (*prof) {
      auto trace = load_trace();
      auto profiles = profile(trace);
      auto os = detail::open_output(out_path);
      if (detail::wants_json(out_path))
        os << profiles_to_json(profiles).dump(2) << '\n';
      else
        write_profiles_csv(os, profiles);
      out << "instances: " << profiles.size() << '\n';
      return kOk;
    }

    if (*bench_cmd) {
      auto cfg = sim_config_from_json(detail::read_json(config_path));
      if (seed) cfg.seed = *seed;
      auto lengths = detail::parse_lengths(lengths_csv);
      auto report = bench(cfg, lengths, BenchOptions{repetitions});
      auto os = detail::open_output(out_path);
      if (detail::wants_json(out_path))
        os << bench_to_json(report).dump(2) << '\n';
      else
        write_bench_csv(os, report);
      write_bench_csv(out, report);
      return kOk;
    }
  } catch (const detail::UsageError& ex) {
    err << "error: " << ex.what() << '\n';
    return kUsage;
  } catch (const Error& ex) {
    err << "error: " << ex.what() << '\n';
    switch (ex.code()) {
      case Errc::ConfigInvalid:
      case Errc::ScenarioInvalid:
        return kUsage;
      case Errc::LengthMismatch:
        return kMismatch;
      default:
        return kBadTrace;
    }
  }
  return kUsage;
}

}  // namespace ipi::cli
