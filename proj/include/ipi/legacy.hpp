#pragma once

// Legacy instance identifier used as the comparison baseline.
//
// It models an identifier built on two assumptions that do not hold for
// interruptible postings:
//   * a task belongs to the instance that *entered* the posting routine, and
//     every posting succeeds, so task ownership is queued at PostTaskEntry
//     and PostOk/PostFail are ignored;
//   * an exit point whose instance still owns queued tasks is only a possible
//     endpoint. Every label from the oldest unresolved possible endpoint
//     onwards is held back in a history buffer until that candidate is
//     settled, which happens when the instance is resumed by a task run.
//
// Failed postings leave entries in the ownership queue that never match a
// task run, so the queue and the history buffer grow with trace length.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <set>
#include <span>
#include <unordered_map>
#include <vector>

#include "ipi/error.hpp"
#include "ipi/identifier.hpp"
#include "ipi/trace_model.hpp"

namespace ipi {

class LegacyIdentifier {
 public:
  // Feeds one event. Labels become final out of order with respect to the
  // input, so they are handed to `release` in seq order as soon as no
  // unresolved candidate precedes them.
  template <typename Sink>
  void step(const Event& e, Sink&& release) {
    Pos pos = Pos::Interm;
    bool switch_after = false;
    Inst after_exit;
    bool candidate = false;

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
        classify_exit(pos, candidate);
        after_exit = preempted_.back();
        preempted_.pop_back();
        switch_after = true;
        break;
      case PointKind::PostTaskEntry:
        post_order_.push_back(current_);
        break;
      case PointKind::RunTaskEntry:
        if (post_order_.empty())
          throw Error(Errc::OrphanRunTaskEntry, "no posted task instance", e.seq());
        current_ = post_order_.front();
        post_order_.pop_front();
        settle(current_);
        break;
      case PointKind::RunTaskExit:
        classify_exit(pos, candidate);
        after_exit = Inst::non_interrupt();
        switch_after = true;
        break;
      case PointKind::PostOk:
      case PointKind::PostFail:
      case PointKind::Other:
        break;
    }

    if (candidate) {
      settle(current_);
      candidates_.emplace(current_.id, e.seq());
      candidate_seqs_.insert(e.seq());
    }
    history_.push_back(Held{e.seq(), Label{current_, pos}});
    flush(release);
    metrics_.observe(preempted_.size(), post_order_.size(), history_.size());
    if (switch_after) current_ = after_exit;
  }

  // End of trace: candidates that were never settled stay intermediate.
  template <typename Sink>
  void finish(Sink&& release) {
    candidates_.clear();
    candidate_seqs_.clear();
    flush(release);
  }

  const StateMetrics& metrics() const noexcept { return metrics_; }
  std::size_t history_size() const noexcept { return history_.size(); }
  std::size_t queue_size() const noexcept { return post_order_.size(); }

 private:
  struct Held {
    std::uint64_t seq;
    Label label;
  };

  void classify_exit(Pos& pos, bool& candidate) const {
    if (current_.is_non_interrupt()) return;
    if (std::find(post_order_.begin(), post_order_.end(), current_) == post_order_.end())
      pos = Pos::End;
    else
      candidate = true;
  }

  void settle(const Inst& inst) {
    auto it = candidates_.find(inst.id);
    if (it == candidates_.end()) return;
    candidate_seqs_.erase(it->second);
    candidates_.erase(it);
  }

  template <typename Sink>
  void flush(Sink& release) {
    while (!history_.empty() &&
           (candidate_seqs_.empty() || history_.front().seq < *candidate_seqs_.begin())) {
      release(history_.front().label);
      history_.pop_front();
    }
  }

  Inst current_ = Inst::non_interrupt();
  std::uint64_t inst_num_ = 0;
  std::vector<Inst> preempted_;
  std::deque<Inst> post_order_;
  std::deque<Held> history_;
  std::unordered_map<std::uint64_t, std::uint64_t> candidates_;  // inst id -> seq
  std::set<std::uint64_t> candidate_seqs_;
  StateMetrics metrics_;
};

inline const StateMetrics& state_metrics(const LegacyIdentifier& state) { return state.metrics(); }

inline std::vector<Label> legacy_run(std::span<const Event> events, LegacyIdentifier& state) {
  std::vector<Label> labels;
  labels.reserve(events.size());
  auto sink = [&labels](const Label& l) { labels.push_back(l); };
  for (const auto& e : events) state.step(e, sink);
  state.finish(sink);
  return labels;
}

inline std::vector<Label> legacy_run(std::span<const Event> events) {
  LegacyIdentifier state;
  return legacy_run(events, state);
}

}  // namespace ipi
