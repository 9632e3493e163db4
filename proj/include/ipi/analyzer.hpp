#pragma once

// Per-instance profiling over labeled traces and the overhead benchmark that
// compares the online identifier with the legacy one.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ipi/error.hpp"
#include "ipi/identifier.hpp"
#include "ipi/legacy.hpp"
#include "ipi/simulator.hpp"
#include "ipi/trace_model.hpp"

namespace ipi {

struct InstanceProfile {
  Inst inst;
  std::uint64_t start_seq = 0;
  std::uint64_t end_seq = 0;
  std::uint64_t event_count = 0;
  std::uint64_t task_runs = 0;
  std::uint64_t failed_posts = 0;
  // IHEntry events that suspended this instance while it was executing.
  std::uint64_t preemptions = 0;
  std::uint64_t max_pending = 0;

  friend bool operator==(const InstanceProfile&, const InstanceProfile&) = default;
};

// One profile per interrupt instance, ordered by instance id. Uses the
// identifier labels (`label`), not the truth column.
inline std::vector<InstanceProfile> profile(std::span<const LabeledEvent> labeled) {
  std::map<std::uint64_t, InstanceProfile> by_id;
  std::map<std::uint64_t, std::uint64_t> pending;
  std::vector<Inst> suspended;
  Inst running = Inst::non_interrupt();

  for (const auto& le : labeled) {
    if (!le.label) throw Error(Errc::MissingLabels, "event has no identifier label", le.event.seq());
    const Inst& inst = le.label->inst;
    const auto kind = le.event.kind();

    if (kind == PointKind::IHEntry && !running.is_non_interrupt()) ++by_id[running.id].preemptions;

    if (!inst.is_non_interrupt()) {
      auto [it, fresh] = by_id.try_emplace(inst.id);
      InstanceProfile& p = it->second;
      if (fresh) {
        p.inst = inst;
        p.start_seq = le.event.seq();
      }
      p.end_seq = le.event.seq();
      ++p.event_count;
      if (kind == PointKind::RunTaskEntry) {
        ++p.task_runs;
        auto& n = pending[inst.id];
        if (n > 0) --n;
      }
      if (kind == PointKind::PostFail) ++p.failed_posts;
      if (kind == PointKind::PostOk) p.max_pending = std::max(p.max_pending, ++pending[inst.id]);
    }

    switch (kind) {
      case PointKind::IHEntry:
        suspended.push_back(running);
        running = inst;
        break;
      case PointKind::IHExit:
        if (suspended.empty()) throw Error(Errc::Unbalanced, "IHExit without IHEntry", le.event.seq());
        running = suspended.back();
        suspended.pop_back();
        break;
      case PointKind::RunTaskExit:
        running = Inst::non_interrupt();
        break;
      default:
        running = inst;
        break;
    }
  }

  std::vector<InstanceProfile> out;
  out.reserve(by_id.size());
  for (auto& [id, p] : by_id) out.push_back(p);
  return out;
}

inline void write_profiles_csv(std::ostream& os, std::span<const InstanceProfile> profiles) {
  os << "inst_id,inst_type,start_seq,end_seq,event_count,task_runs,failed_posts,preemptions,"
        "max_pending\n";
  for (const auto& p : profiles)
    os << p.inst.id << ',' << p.inst.itype << ',' << p.start_seq << ',' << p.end_seq << ','
       << p.event_count << ',' << p.task_runs << ',' << p.failed_posts << ',' << p.preemptions
       << ',' << p.max_pending << '\n';
}

inline nlohmann::json profiles_to_json(std::span<const InstanceProfile> profiles) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& p : profiles)
    out.push_back({{"inst_id", p.inst.id},
                   {"inst_type", p.inst.itype},
                   {"start_seq", p.start_seq},
                   {"end_seq", p.end_seq},
                   {"event_count", p.event_count},
                   {"task_runs", p.task_runs},
                   {"failed_posts", p.failed_posts},
                   {"preemptions", p.preemptions},
                   {"max_pending", p.max_pending}});
  return out;
}

// ---------------------------------------------------------------------------
// Benchmark

enum class Algo { New, Legacy };

inline std::string_view to_string(Algo algo) { return algo == Algo::New ? "new" : "legacy"; }

struct BenchRow {
  std::uint64_t trace_len = 0;  // simulator horizon
  std::uint64_t events = 0;     // events actually emitted
  Algo algo = Algo::New;
  std::uint64_t aux_space_peak = 0;
  double wall_time_total = 0;      // seconds, median over repetitions
  double wall_time_per_event = 0;  // seconds

  // Excludes wall times, which are not reproducible.
  bool same_measurement(const BenchRow& o) const {
    return trace_len == o.trace_len && events == o.events && algo == o.algo &&
           aux_space_peak == o.aux_space_peak;
  }
};

struct BenchReport {
  std::vector<BenchRow> rows;

  const BenchRow* find(std::uint64_t trace_len, Algo algo) const {
    for (const auto& r : rows)
      if (r.trace_len == trace_len && r.algo == algo) return &r;
    return nullptr;
  }
};

struct BenchOptions {
  int repetitions = 5;
};

namespace detail {

inline double median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  if (n == 0) return 0;
  return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

// Runs one identifier over the trace, returning its metrics and the elapsed
// seconds. Labels are folded into a checksum rather than stored so only the
// identification work is timed.
inline std::pair<StateMetrics, double> timed_pass(std::span<const Event> events, Algo algo) {
  std::uint64_t checksum = 0;
  auto fold = [&checksum](const Label& l) {
    checksum = checksum * 31 + l.inst.id + static_cast<std::uint64_t>(l.pos);
  };
  StateMetrics metrics;
  auto t0 = std::chrono::steady_clock::now();
  if (algo == Algo::New) {
    Identifier id;
    for (const auto& e : events) fold(id.step(e));
    metrics = id.metrics();
  } else {
    LegacyIdentifier id;
    for (const auto& e : events) id.step(e, fold);
    id.finish(fold);
    metrics = id.metrics();
  }
  auto t1 = std::chrono::steady_clock::now();
  volatile std::uint64_t sink = checksum;
  (void)sink;
  return {metrics, std::chrono::duration<double>(t1 - t0).count()};
}

}  // namespace detail

inline BenchReport bench(SimConfig config, std::span<const std::uint64_t> lengths,
                         BenchOptions options = {}) {
  if (!std::is_sorted(lengths.begin(), lengths.end()))
    throw Error(Errc::ConfigInvalid, "lengths: must be ascending");
  if (options.repetitions < 1) throw Error(Errc::ConfigInvalid, "repetitions: must be positive");

  BenchReport report;
  for (std::uint64_t len : lengths) {
    config.horizon = len;
    const auto events = events_of(simulate(config));
    for (Algo algo : {Algo::New, Algo::Legacy}) {
      BenchRow row{len, events.size(), algo, 0, 0, 0};
      std::vector<double> times;
      for (int r = 0; r < options.repetitions; ++r) {
        auto [metrics, seconds] = detail::timed_pass(events, algo);
        row.aux_space_peak = metrics.aux_space_peak;
        times.push_back(seconds);
      }
      row.wall_time_total = detail::median(times);
      row.wall_time_per_event = events.empty() ? 0 : row.wall_time_total / events.size();
      report.rows.push_back(row);
    }
  }
  return report;
}

inline void write_bench_csv(std::ostream& os, const BenchReport& report) {
  os << "trace_len,events,algo,aux_space_peak,wall_time_total,wall_time_per_event\n";
  for (const auto& r : report.rows) {
    os << r.trace_len << ',' << r.events << ',' << to_string(r.algo) << ',' << r.aux_space_peak
       << ',' << nlohmann::json(r.wall_time_total).dump() << ','
       << nlohmann::json(r.wall_time_per_event).dump() << '\n';
  }
}

inline nlohmann::json bench_to_json(const BenchReport& report) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : report.rows)
    out.push_back({{"trace_len", r.trace_len},
                   {"events", r.events},
                   {"algo", to_string(r.algo)},
                   {"aux_space_peak", r.aux_space_peak},
                   {"wall_time_total", r.wall_time_total},
                   {"wall_time_per_event", r.wall_time_per_event}});
  return out;
}

}  // namespace ipi
