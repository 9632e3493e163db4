#pragma once

// Offline labeler over a whole, drained trace.
//
// Handler extents come from bracket matching IHEntry/IHExit pairs; the k-th
// task run (RunTaskEntry..RunTaskExit) is owned by whatever executes the
// k-th PostOk. Every instance's first event is its START and its last event
// its END. Nothing here replays the identifier's stack or queue.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ipi/error.hpp"
#include "ipi/trace_model.hpp"

namespace ipi {

inline std::vector<Label> label_offline(std::span<const Event> events) {
  const std::size_t n = events.size();
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);

  // Pass 1a: every IHExit closes the most recent open IHEntry.
  {
    std::vector<std::size_t> open;
    for (std::size_t i = 0; i < n; ++i) {
      if (events[i].kind() == PointKind::IHEntry) {
        open.push_back(i);
      } else if (events[i].kind() == PointKind::IHExit) {
        if (open.empty()) throw Error(Errc::Unbalanced, "IHExit without IHEntry", events[i].seq());
        open.pop_back();
      }
    }
    if (!open.empty())
      throw Error(Errc::Unbalanced, "IHEntry without IHExit", events[open.back()].seq());
  }

  // Instance ids follow IHEntry order.
  std::vector<Inst> handler_inst(n);
  std::uint64_t instance_count = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (events[i].kind() == PointKind::IHEntry)
      handler_inst[i] = Inst{++instance_count, events[i].irq()};

  // Pass 1b: innermost enclosing handler entry of every event, from the
  // interval nesting (an IHExit belongs to its own handler).
  std::vector<std::size_t> enclosing(n, kNone);
  {
    std::vector<std::size_t> open;
    for (std::size_t i = 0; i < n; ++i) {
      const auto kind = events[i].kind();
      if (kind == PointKind::IHEntry) open.push_back(i);
      enclosing[i] = open.empty() ? kNone : open.back();
      if (kind == PointKind::IHExit) open.pop_back();
    }
  }

  // Pass 1c: global FIFO matching of the k-th PostOk with the k-th task run.
  std::vector<std::size_t> post_oks;
  std::vector<std::size_t> run_entries;
  for (std::size_t i = 0; i < n; ++i) {
    if (events[i].kind() == PointKind::PostOk) post_oks.push_back(i);
    if (events[i].kind() == PointKind::RunTaskEntry) run_entries.push_back(i);
  }
  for (std::size_t k = 0; k < run_entries.size(); ++k)
    if (k >= post_oks.size() || post_oks[k] > run_entries[k])
      throw Error(Errc::OrphanRunTaskEntry, "task run without an earlier PostOk",
                  events[run_entries[k]].seq());
  if (post_oks.size() > run_entries.size())
    throw Error(Errc::Undrained, "PostOk never followed by its task run",
                events[post_oks[run_entries.size()]].seq());

  // Task span membership: the run index covering each event outside handlers.
  std::vector<std::size_t> run_of(n, kNone);
  {
    std::size_t active = kNone;
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto kind = events[i].kind();
      if ((kind == PointKind::RunTaskEntry || kind == PointKind::RunTaskExit) &&
          enclosing[i] != kNone)
        throw Error(Errc::Unbalanced, "task boundary inside an interrupt handler", events[i].seq());
      if (kind == PointKind::RunTaskEntry) {
        if (active != kNone)
          throw Error(Errc::Unbalanced, "task run started inside another task run", events[i].seq());
        active = k++;
      }
      if (enclosing[i] == kNone) run_of[i] = active;
      if (kind == PointKind::RunTaskExit) {
        if (active == kNone)
          throw Error(Errc::Unbalanced, "RunTaskExit outside a task run", events[i].seq());
        active = kNone;
      }
    }
    if (active != kNone)
      throw Error(Errc::Unbalanced, "task run never exits", events[run_entries[active]].seq());
  }

  // Context instance, resolved in trace order: every PostOk precedes the
  // task run it owns, so its instance is already known.
  std::vector<Inst> inst(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (enclosing[i] != kNone)
      inst[i] = handler_inst[enclosing[i]];
    else if (run_of[i] != kNone)
      inst[i] = inst[post_oks[run_of[i]]];
    else
      inst[i] = Inst::non_interrupt();
  }

  // Pass 2: first and last event of every instance.
  std::vector<Label> labels(n);
  std::vector<std::size_t> first(instance_count + 1, kNone);
  std::vector<std::size_t> last(first.size(), kNone);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = Label{inst[i], Pos::Interm};
    if (inst[i].is_non_interrupt()) continue;
    auto id = static_cast<std::size_t>(inst[i].id);
    if (first[id] == kNone) first[id] = i;
    last[id] = i;
  }
  for (std::size_t id = 1; id < first.size(); ++id) {
    if (first[id] == kNone) continue;
    labels[first[id]].pos = Pos::Start;
    labels[last[id]].pos = Pos::End;
  }
  return labels;
}

struct LabelDiff {
  std::uint64_t seq;
  Label a;
  Label b;

  friend bool operator==(const LabelDiff&, const LabelDiff&) = default;
};

inline std::vector<LabelDiff> diff_labels(std::span<const Label> a, std::span<const Label> b) {
  if (a.size() != b.size())
    throw Error(Errc::LengthMismatch,
                std::to_string(a.size()) + " vs " + std::to_string(b.size()) + " labels");
  std::vector<LabelDiff> out;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) out.push_back(LabelDiff{i, a[i], b[i]});
  return out;
}

}  // namespace ipi
