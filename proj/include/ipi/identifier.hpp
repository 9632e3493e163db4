#pragma once

// Online interrupt-procedure-instance identification.
//
// The identifier consumes one event at a time and returns that event's
// label before the next event is seen. Its auxiliary state is one counter,
// a stack of preempted instances (bounded by the interrupt-nesting depth)
// and a FIFO of instances owning pending tasks (bounded by the OS task
// queue), so both space and per-event time are constant.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <span>
#include <string>
#include <vector>

#include "ipi/error.hpp"
#include "ipi/trace_model.hpp"

namespace ipi {

struct StateMetrics {
  std::uint64_t stack_depth_max = 0;
  std::uint64_t queue_len_max = 0;
  std::uint64_t history_len_max = 0;
  std::uint64_t events_processed = 0;
  // Peak of stack + queue + history sizes observed at the same step.
  std::uint64_t aux_space_peak = 0;

  void observe(std::size_t stack, std::size_t queue, std::size_t history) {
    stack_depth_max = std::max<std::uint64_t>(stack_depth_max, stack);
    queue_len_max = std::max<std::uint64_t>(queue_len_max, queue);
    history_len_max = std::max<std::uint64_t>(history_len_max, history);
    aux_space_peak = std::max<std::uint64_t>(aux_space_peak, stack + queue + history);
    ++events_processed;
  }

  friend bool operator==(const StateMetrics&, const StateMetrics&) = default;
};

// JSON object with the four state-metrics fields.
inline std::string to_json(const StateMetrics& m) {
  return "{\"stack_depth_max\":" + std::to_string(m.stack_depth_max) +
         ",\"queue_len_max\":" + std::to_string(m.queue_len_max) +
         ",\"history_len_max\":" + std::to_string(m.history_len_max) +
         ",\"events_processed\":" + std::to_string(m.events_processed) + "}";
}

class Identifier {
 public:
  Label step(const Event& e) {
    Pos pos = Pos::Interm;
    bool switch_after = false;
    Inst after_exit;

    switch (e.kind()) {
      case PointKind::IHEntry:
        preempted_.push_back(current_);
        ++inst_num_;
        current_ = Inst{inst_num_, e.irq()};
        pos = Pos::Start;
        break;
      case PointKind::IHExit:
        if (preempted_.empty())
          throw Error(Errc::UnbalancedIHExit, "no active interrupt handler", e.seq());
        if (ends_here()) pos = Pos::End;
        after_exit = preempted_.back();
        preempted_.pop_back();
        switch_after = true;
        break;
      case PointKind::PostOk:
        pending_.push_back(current_);
        break;
      case PointKind::RunTaskEntry:
        if (pending_.empty())
          throw Error(Errc::OrphanRunTaskEntry, "no pending task instance", e.seq());
        current_ = pending_.front();
        pending_.pop_front();
        break;
      case PointKind::RunTaskExit:
        if (ends_here()) pos = Pos::End;
        after_exit = Inst::non_interrupt();
        switch_after = true;
        break;
      case PointKind::PostTaskEntry:
      case PointKind::PostFail:
      case PointKind::Other:
        break;
    }

    Label out{current_, pos};
    metrics_.observe(preempted_.size(), pending_.size(), 0);
    if (switch_after) current_ = after_exit;
    return out;
  }

  const Inst& current() const noexcept { return current_; }
  std::uint64_t instance_count() const noexcept { return inst_num_; }
  std::span<const Inst> preempted() const noexcept { return preempted_; }
  const std::deque<Inst>& pending() const noexcept { return pending_; }
  const StateMetrics& metrics() const noexcept { return metrics_; }

 private:
  // The non-interrupt instance has no endpoints.
  bool ends_here() const {
    return !current_.is_non_interrupt() &&
           std::find(pending_.begin(), pending_.end(), current_) == pending_.end();
  }

  Inst current_ = Inst::non_interrupt();
  std::uint64_t inst_num_ = 0;
  std::vector<Inst> preempted_;
  std::deque<Inst> pending_;
  StateMetrics metrics_;
};

inline const StateMetrics& state_metrics(const Identifier& state) { return state.metrics(); }

inline std::vector<Label> run(std::span<const Event> events, Identifier& state) {
  std::vector<Label> labels;
  labels.reserve(events.size());
  for (const auto& e : events) labels.push_back(state.step(e));
  return labels;
}

inline std::vector<Label> run(std::span<const Event> events) {
  Identifier state;
  return run(events, state);
}

}  // namespace ipi
