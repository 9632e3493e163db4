#pragma once

// Deterministic generator of interrupt-driven execution traces.
//
// The modelled machine has preemptive interrupt handlers (nesting bounded by
// nest_depth_max), a FIFO task queue with one pending flag per task name
// (a post fails while the task is already pending), and non-atomic postings:
// a PostTaskEntry is followed by `post_gap` ordinary instructions before the
// PostOk/PostFail, and interrupts may arrive anywhere in between. Every
// emitted event carries the ground-truth instance of the code executing it.
//
// Random mode, one tick at a time:
//   1. while tick < horizon, one arrival draw per irq (in list order); the
//      first arriving irq that is not masked fires and the tick emits its
//      IHEntry. Masked: nesting already at nest_depth_max, the irq already
//      active (unless allow_self_nest), or a posting in progress when
//      atomic_posts is set.
//   2. otherwise the running context advances one instruction. Handlers and
//      tasks execute `handler_len` / `task_len` body steps; each step is a
//      posting with probability post_prob (post_in_task_prob for tasks) or
//      an Other. A finished body emits IHExit / RunTaskExit.
//   3. with no handler or task running and tasks pending, the scheduler
//      emits one Other (non-interrupt instance) and then RunTaskEntry for the
//      queue head. With nothing pending the tick is idle and emits nothing.
// After the horizon no interrupts arrive; with drain set, the machine then
// runs to quiescence with task-initiated postings disabled.

#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ipi/error.hpp"
#include "ipi/rng.hpp"
#include "ipi/trace_model.hpp"

namespace ipi {

struct IntRange {
  std::uint64_t min = 0;
  std::uint64_t max = 0;
};

struct SimConfig {
  std::vector<std::uint32_t> irqs{1, 2};
  // One probability per entry of irqs.
  std::vector<double> arrival_prob{0.02, 0.02};
  std::uint64_t nest_depth_max = 2;
  bool allow_self_nest = false;
  IntRange handler_len{2, 8};
  IntRange task_len{2, 8};
  double post_prob = 0.2;
  double post_in_task_prob = 0.05;
  std::map<std::uint32_t, std::vector<std::string>> task_names{{1, {"T1a", "T1b"}},
                                                               {2, {"T2a"}}};
  IntRange post_gap{0, 3};
  std::uint64_t horizon = 10000;
  bool drain = true;
  // Masks interrupts inside posting windows and skips posts of tasks that
  // are already pending, so every posting is atomic and succeeds.
  bool atomic_posts = false;
  std::uint64_t seed = 0;
};

inline void validate(const SimConfig& cfg) {
  auto bad = [](const std::string& field, const std::string& why) {
    throw Error(Errc::ConfigInvalid, field + ": " + why);
  };
  auto prob = [&](const std::string& field, double p) {
    if (!(p >= 0.0 && p <= 1.0)) bad(field, "probability must be in [0,1]");
  };
  auto range = [&](const std::string& field, const IntRange& r) {
    if (r.min > r.max) bad(field, "range min exceeds max");
  };

  if (cfg.irqs.empty()) bad("irqs", "at least one interrupt required");
  std::set<std::uint32_t> seen;
  for (auto irq : cfg.irqs) {
    if (irq == 0) bad("irqs", "interrupt numbers must be positive");
    if (!seen.insert(irq).second) bad("irqs", "duplicate interrupt " + std::to_string(irq));
  }
  if (cfg.arrival_prob.size() != cfg.irqs.size())
    bad("arrival_prob", "needs one probability per irq");
  for (double p : cfg.arrival_prob) prob("arrival_prob", p);
  if (cfg.nest_depth_max == 0) bad("nest_depth_max", "must be at least 1");
  range("handler_len", cfg.handler_len);
  range("task_len", cfg.task_len);
  range("post_gap", cfg.post_gap);
  prob("post_prob", cfg.post_prob);
  prob("post_in_task_prob", cfg.post_in_task_prob);
  for (const auto& [irq, names] : cfg.task_names) {
    if (!seen.count(irq)) bad("task_names", "unknown irq " + std::to_string(irq));
    for (const auto& name : names)
      if (!is_task_token(name)) bad("task_names", "invalid task name '" + name + "'");
  }
  if (cfg.horizon == 0) bad("horizon", "must be positive");
}

inline std::size_t task_name_count(const SimConfig& cfg) {
  std::set<std::string> names;
  for (const auto& [irq, list] : cfg.task_names) names.insert(list.begin(), list.end());
  return names.size();
}

// ---------------------------------------------------------------------------
// JSON configuration. Keys mirror the SimConfig field names; ranges are
// written as [min, max] or a single integer, arrival_prob as one number for
// all irqs or an array, task_names as {"<irq>": ["name", ...]}.

namespace detail {

// nlohmann converts -3 to a huge unsigned value; reject it instead.
template <typename Int>
Int uint_from_json(const nlohmann::json& j) {
  if (!j.is_number_unsigned()) throw std::invalid_argument("expected a non-negative integer");
  const auto v = j.get<std::uint64_t>();
  if (v > std::numeric_limits<Int>::max()) throw std::invalid_argument("value out of range");
  return static_cast<Int>(v);
}

inline IntRange range_from_json(const nlohmann::json& j) {
  if (j.is_number_unsigned()) return {j.get<std::uint64_t>(), j.get<std::uint64_t>()};
  if (j.is_array() && j.size() == 2 && j[0].is_number_unsigned() && j[1].is_number_unsigned())
    return {j[0].get<std::uint64_t>(), j[1].get<std::uint64_t>()};
  throw std::invalid_argument("expected [min, max] of non-negative integers");
}

}  // namespace detail

inline SimConfig sim_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(Errc::ConfigInvalid, "config: expected a JSON object");
  SimConfig cfg;
  std::optional<nlohmann::json> arrival;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    const auto& v = it.value();
    try {
      if (key == "irqs") {
        if (!v.is_array()) throw std::invalid_argument("expected an array of irq numbers");
        cfg.irqs.clear();
        for (const auto& irq : v) cfg.irqs.push_back(detail::uint_from_json<std::uint32_t>(irq));
      } else if (key == "arrival_prob") {
        arrival = v;
      } else if (key == "nest_depth_max") {
        cfg.nest_depth_max = detail::uint_from_json<std::uint64_t>(v);
      } else if (key == "allow_self_nest") {
        cfg.allow_self_nest = v.get<bool>();
      } else if (key == "handler_len") {
        cfg.handler_len = detail::range_from_json(v);
      } else if (key == "task_len") {
        cfg.task_len = detail::range_from_json(v);
      } else if (key == "post_prob") {
        cfg.post_prob = v.get<double>();
      } else if (key == "post_in_task_prob") {
        cfg.post_in_task_prob = v.get<double>();
      } else if (key == "task_names") {
        if (!v.is_object()) throw std::invalid_argument("expected an object keyed by irq");
        cfg.task_names.clear();
        for (auto t = v.begin(); t != v.end(); ++t) {
          auto irq = detail::parse_uint<std::uint32_t>(t.key());
          if (!irq) throw std::invalid_argument("key '" + t.key() + "' is not an irq number");
          cfg.task_names[*irq] = t.value().get<std::vector<std::string>>();
        }
      } else if (key == "post_gap") {
        cfg.post_gap = detail::range_from_json(v);
      } else if (key == "horizon") {
        cfg.horizon = detail::uint_from_json<std::uint64_t>(v);
      } else if (key == "drain") {
        cfg.drain = v.get<bool>();
      } else if (key == "atomic_posts") {
        cfg.atomic_posts = v.get<bool>();
      } else if (key == "seed") {
        cfg.seed = detail::uint_from_json<std::uint64_t>(v);
      } else {
        throw Error(Errc::ConfigInvalid, key + ": unknown field");
      }
    } catch (const Error&) {
      throw;
    } catch (const std::exception& ex) {
      throw Error(Errc::ConfigInvalid, key + ": " + ex.what());
    }
  }
  if (arrival) {
    try {
      if (arrival->is_number())
        cfg.arrival_prob.assign(cfg.irqs.size(), arrival->get<double>());
      else
        cfg.arrival_prob = arrival->get<std::vector<double>>();
    } catch (const std::exception& ex) {
      throw Error(Errc::ConfigInvalid, std::string("arrival_prob: ") + ex.what());
    }
  } else {
    cfg.arrival_prob.assign(cfg.irqs.size(), SimConfig{}.arrival_prob.front());
  }
  validate(cfg);
  return cfg;
}

inline nlohmann::json to_json(const SimConfig& cfg) {
  nlohmann::json names = nlohmann::json::object();
  for (const auto& [irq, list] : cfg.task_names) names[std::to_string(irq)] = list;
  auto range = [](const IntRange& r) { return nlohmann::json::array({r.min, r.max}); };
  return {
      {"irqs", cfg.irqs},
      {"arrival_prob", cfg.arrival_prob},
      {"nest_depth_max", cfg.nest_depth_max},
      {"allow_self_nest", cfg.allow_self_nest},
      {"handler_len", range(cfg.handler_len)},
      {"task_len", range(cfg.task_len)},
      {"post_prob", cfg.post_prob},
      {"post_in_task_prob", cfg.post_in_task_prob},
      {"task_names", names},
      {"post_gap", range(cfg.post_gap)},
      {"horizon", cfg.horizon},
      {"drain", cfg.drain},
      {"atomic_posts", cfg.atomic_posts},
      {"seed", cfg.seed},
  };
}

// ---------------------------------------------------------------------------
// Machine shared by the random and scripted drivers.

namespace detail {

struct Posting {
  std::string task;
  std::uint64_t gap_left = 0;
  std::optional<bool> expect_ok;
};

struct Frame {
  Inst inst;
  std::uint32_t irq = 0;
  std::string task;
  std::uint64_t body_left = 0;
  std::optional<Posting> posting;
};

class Machine {
 public:
  Frame& current() {
    if (!nest_.empty()) return nest_.back();
    if (task_) return *task_;
    return idle_;
  }

  bool handler_active() const { return !nest_.empty(); }
  bool task_active() const { return task_.has_value(); }
  bool irq_active(std::uint32_t irq) const {
    for (const auto& f : nest_)
      if (f.irq == irq) return true;
    return false;
  }
  std::size_t depth() const { return nest_.size(); }
  bool has_pending() const { return !queue_.empty(); }
  bool is_pending(const std::string& task) const { return pending_.count(task) != 0; }
  bool quiescent() const { return nest_.empty() && !task_ && queue_.empty() && !idle_.posting; }
  std::size_t emitted() const { return events_.size(); }

  void emit(Event e, const Inst& inst, Pos pos = Pos::Interm) {
    e.set_seq(events_.size());
    events_.push_back(LabeledEvent{std::move(e), std::nullopt, Label{inst, pos}});
  }

  void enter_handler(std::uint32_t irq, std::uint64_t body) {
    Inst inst{++inst_num_, irq};
    nest_.push_back(Frame{inst, irq, {}, body, std::nullopt});
    emit(Event::ih_entry(irq), inst, Pos::Start);
  }

  void exit_handler() {
    Frame f = std::move(nest_.back());
    nest_.pop_back();
    emit(Event::ih_exit(f.irq), f.inst);
  }

  void begin_post(std::string task, std::uint64_t gap, std::optional<bool> expect_ok = {}) {
    Frame& f = current();
    emit(Event::post_task_entry(task), f.inst);
    f.posting = Posting{std::move(task), gap, expect_ok};
  }

  // Emits one instruction of the in-progress posting of the current context.
  // Returns the outcome once the posting completes.
  std::optional<bool> advance_post() {
    Frame& f = current();
    Posting& p = *f.posting;
    if (p.gap_left > 0) {
      --p.gap_left;
      emit(Event::other(), f.inst);
      return std::nullopt;
    }
    bool ok = !is_pending(p.task);
    if (p.expect_ok && *p.expect_ok != ok)
      throw Error(Errc::ScenarioInvalid,
                  "post of " + p.task + (ok ? " succeeds" : " fails") + " at index " +
                      std::to_string(events_.size()) + " contrary to the script");
    if (ok) {
      queue_.emplace_back(p.task, f.inst);
      pending_.insert(p.task);
      if (!f.inst.is_non_interrupt()) ++live_[f.inst.id];
      emit(Event::post_ok(p.task), f.inst);
    } else {
      emit(Event::post_fail(p.task), f.inst);
    }
    f.posting.reset();
    return ok;
  }

  void dispatch(std::uint64_t body) {
    auto [name, inst] = std::move(queue_.front());
    queue_.pop_front();
    pending_.erase(name);
    if (!inst.is_non_interrupt()) --live_[inst.id];
    task_ = Frame{inst, 0, name, body, std::nullopt};
    emit(Event::run_task_entry(std::move(name)), inst);
  }

  void exit_task() {
    Frame f = std::move(*task_);
    task_.reset();
    emit(Event::run_task_exit(f.task), f.inst);
  }

  // Marks END on the last event of every instance that has finished: not
  // executing, not preempted and owning no pending task.
  std::vector<LabeledEvent> finish() && {
    std::unordered_set<std::uint64_t> unfinished;
    for (const auto& f : nest_) unfinished.insert(f.inst.id);
    if (task_) unfinished.insert(task_->inst.id);
    for (const auto& [id, count] : live_)
      if (count > 0) unfinished.insert(id);

    std::unordered_map<std::uint64_t, std::size_t> last;
    for (std::size_t i = 0; i < events_.size(); ++i) {
      const Inst& inst = events_[i].truth->inst;
      if (!inst.is_non_interrupt()) last[inst.id] = i;
    }
    for (const auto& [id, index] : last)
      if (!unfinished.count(id)) events_[index].truth->pos = Pos::End;
    return std::move(events_);
  }

 private:
  std::vector<LabeledEvent> events_;
  std::vector<Frame> nest_;
  std::optional<Frame> task_;
  Frame idle_;
  std::deque<std::pair<std::string, Inst>> queue_;
  std::unordered_set<std::string> pending_;
  std::unordered_map<std::uint64_t, std::uint64_t> live_;
  std::uint64_t inst_num_ = 0;
};

}  // namespace detail

inline std::vector<LabeledEvent> simulate(const SimConfig& cfg) {
  validate(cfg);
  Rng rng(cfg.seed);
  detail::Machine m;
  static const std::vector<std::string> kNoTasks;

  auto names_for = [&cfg](std::uint32_t irq) -> const std::vector<std::string>& {
    auto it = cfg.task_names.find(irq);
    return it == cfg.task_names.end() ? kNoTasks : it->second;
  };
  auto draw = [&rng](const IntRange& r) { return rng.between(r.min, r.max); };

  // One body instruction of a handler or task; false once the body is done.
  auto body_step = [&](detail::Frame& f, double post_prob) {
    if (f.posting) {
      m.advance_post();
      return true;
    }
    if (f.body_left == 0) return false;
    --f.body_left;
    const auto& names = names_for(f.inst.itype);
    if (!names.empty() && rng.chance(post_prob)) {
      const std::string& name = names[rng.between(0, names.size() - 1)];
      if (cfg.atomic_posts && m.is_pending(name))
        m.emit(Event::other(), f.inst);
      else
        m.begin_post(name, draw(cfg.post_gap));
    } else {
      m.emit(Event::other(), f.inst);
    }
    return true;
  };

  bool dispatch_ready = false;
  for (std::uint64_t tick = 0;; ++tick) {
    const bool open = tick < cfg.horizon;
    if (!open && (!cfg.drain || m.quiescent())) break;

    if (open) {
      std::optional<std::uint32_t> fire;
      for (std::size_t k = 0; k < cfg.irqs.size(); ++k) {
        bool arrives = rng.chance(cfg.arrival_prob[k]);
        if (!arrives || fire) continue;
        std::uint32_t irq = cfg.irqs[k];
        if (m.depth() >= cfg.nest_depth_max) continue;
        if (!cfg.allow_self_nest && m.irq_active(irq)) continue;
        if (cfg.atomic_posts && m.current().posting) continue;
        fire = irq;
      }
      if (fire) {
        m.enter_handler(*fire, draw(cfg.handler_len));
        continue;
      }
    }

    if (m.handler_active()) {
      if (!body_step(m.current(), cfg.post_prob)) m.exit_handler();
    } else if (m.task_active()) {
      if (!body_step(m.current(), open ? cfg.post_in_task_prob : 0.0)) m.exit_task();
    } else if (m.has_pending()) {
      if (!dispatch_ready) {
        m.emit(Event::other(), Inst::non_interrupt());
        dispatch_ready = true;
      } else {
        m.dispatch(draw(cfg.task_len));
        dispatch_ready = false;
      }
    }
  }
  return std::move(m).finish();
}

// ---------------------------------------------------------------------------
// Scripted scenarios.
//
// A scenario is a list of actions keyed by the index of the event at which
// they take effect (strictly increasing):
//   irq_arrive {irq}           the event at `at` is this interrupt's IHEntry
//   post {task, gap}           the running context emits PostTaskEntry at
//                              `at`; after `gap` Others of that context the
//                              posting must succeed
//   post_fail_expected {...}   as post, but the posting must fail
//   body_len {len}             the running context emits `len` Others
// With no action due, a handler exits, a running task exits, or the
// scheduler starts the next pending task (no scheduler Other is emitted).
// The script runs to quiescence.

enum class ScriptActionKind { IrqArrive, Post, PostFailExpected, BodyLen };

struct ScriptAction {
  std::uint64_t at = 0;
  ScriptActionKind action = ScriptActionKind::BodyLen;
  std::uint32_t irq = 0;
  std::string task;
  std::uint64_t gap = 0;
  std::uint64_t len = 0;

  static ScriptAction irq_arrive(std::uint64_t at, std::uint32_t irq) {
    return {at, ScriptActionKind::IrqArrive, irq, {}, 0, 0};
  }
  static ScriptAction post(std::uint64_t at, std::string task, std::uint64_t gap = 0) {
    return {at, ScriptActionKind::Post, 0, std::move(task), gap, 0};
  }
  static ScriptAction post_fail_expected(std::uint64_t at, std::string task, std::uint64_t gap = 0) {
    return {at, ScriptActionKind::PostFailExpected, 0, std::move(task), gap, 0};
  }
  static ScriptAction body_len(std::uint64_t at, std::uint64_t len) {
    return {at, ScriptActionKind::BodyLen, 0, {}, 0, len};
  }
};

using Scenario = std::vector<ScriptAction>;

inline Scenario scenario_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw Error(Errc::ScenarioInvalid, "expected a JSON array of actions");
  Scenario out;
  for (const auto& item : j) {
    try {
      ScriptAction a;
      a.at = detail::uint_from_json<std::uint64_t>(item.at("at"));
      auto name = item.at("action").get<std::string>();
      if (name == "irq_arrive") {
        a.action = ScriptActionKind::IrqArrive;
        a.irq = detail::uint_from_json<std::uint32_t>(item.at("irq"));
      } else if (name == "post" || name == "post_fail_expected") {
        a.action = name == "post" ? ScriptActionKind::Post : ScriptActionKind::PostFailExpected;
        a.task = item.at("task").get<std::string>();
        a.gap = item.contains("gap") ? detail::uint_from_json<std::uint64_t>(item.at("gap")) : 0;
      } else if (name == "body_len") {
        a.action = ScriptActionKind::BodyLen;
        a.len = detail::uint_from_json<std::uint64_t>(item.at("len"));
      } else {
        throw Error(Errc::ScenarioInvalid, "unknown action '" + name + "'");
      }
      out.push_back(std::move(a));
    } catch (const Error&) {
      throw;
    } catch (const std::exception& ex) {
      throw Error(Errc::ScenarioInvalid, ex.what());
    }
  }
  return out;
}

inline nlohmann::json to_json(const Scenario& scenario) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& a : scenario) {
    nlohmann::json item{{"at", a.at}};
    switch (a.action) {
      case ScriptActionKind::IrqArrive:
        item["action"] = "irq_arrive";
        item["irq"] = a.irq;
        break;
      case ScriptActionKind::Post:
      case ScriptActionKind::PostFailExpected:
        item["action"] = a.action == ScriptActionKind::Post ? "post" : "post_fail_expected";
        item["task"] = a.task;
        item["gap"] = a.gap;
        break;
      case ScriptActionKind::BodyLen:
        item["action"] = "body_len";
        item["len"] = a.len;
        break;
    }
    out.push_back(std::move(item));
  }
  return out;
}

inline std::optional<Scenario> builtin_scenario(std::string_view name) {
  using A = ScriptAction;
  if (name == "fig1a") {
    // IPI1 posts T1, is preempted by IPI2 (no tasks), then posts again; the
    // second post fails because T1 is still pending.
    return Scenario{A::irq_arrive(0, 1), A::post(1, "T1"), A::irq_arrive(3, 2),
                    A::post_fail_expected(5, "T1")};
  }
  if (name == "fig1b") {
    // IPI1's posting of T1 is interrupted by IPI2, whose own posting of T2
    // completes first.
    return Scenario{A::irq_arrive(0, 1), A::post(1, "T1"), A::irq_arrive(2, 2),
                    A::post(3, "T2")};
  }
  return std::nullopt;
}

inline std::vector<LabeledEvent> script(const Scenario& scenario) {
  for (std::size_t i = 0; i < scenario.size(); ++i) {
    const auto& a = scenario[i];
    if (i > 0 && a.at <= scenario[i - 1].at)
      throw Error(Errc::ScenarioInvalid, "action indices must be strictly increasing");
    if (a.action == ScriptActionKind::IrqArrive && a.irq == 0)
      throw Error(Errc::ScenarioInvalid, "irq must be positive");
    if ((a.action == ScriptActionKind::Post || a.action == ScriptActionKind::PostFailExpected) &&
        !is_task_token(a.task))
      throw Error(Errc::ScenarioInvalid, "invalid task name '" + a.task + "'");
  }

  detail::Machine m;
  std::size_t next = 0;
  while (true) {
    const std::uint64_t t = m.emitted();
    const ScriptAction* a = next < scenario.size() ? &scenario[next] : nullptr;
    if (a && a->at < t)
      throw Error(Errc::ScenarioInvalid,
                  "action at index " + std::to_string(a->at) + " could not take effect");
    const bool due = a && a->at == t;

    if (due && a->action == ScriptActionKind::IrqArrive) {
      m.enter_handler(a->irq, 0);
      ++next;
      continue;
    }
    detail::Frame& f = m.current();
    if (f.posting) {
      m.advance_post();
      continue;
    }
    if (due) {
      switch (a->action) {
        case ScriptActionKind::Post: m.begin_post(a->task, a->gap, true); break;
        case ScriptActionKind::PostFailExpected: m.begin_post(a->task, a->gap, false); break;
        case ScriptActionKind::BodyLen: f.body_left = a->len; break;
        case ScriptActionKind::IrqArrive: break;
      }
      ++next;
      continue;
    }
    if (f.body_left > 0) {
      --f.body_left;
      m.emit(Event::other(), f.inst);
      continue;
    }
    if (m.handler_active()) {
      m.exit_handler();
    } else if (m.task_active()) {
      m.exit_task();
    } else if (m.has_pending()) {
      m.dispatch(0);
    } else if (a) {
      throw Error(Errc::ScenarioInvalid,
                  "machine is idle before the action at index " + std::to_string(a->at));
    } else {
      break;
    }
  }
  return std::move(m).finish();
}

}  // namespace ipi
