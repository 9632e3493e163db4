#pragma once

// Event vocabulary, instance identities, labels and the line-oriented trace
// file format.
//
// On disk a trace is LF-terminated text, one event per line:
//
//   <Kind> [irq=<n>] [task=<name>] [inst=<id>:<itype> pos=<POS>] [truth=<id>:<itype>:<POS>]
//
// Lines starting with '#' and empty lines are skipped. The sequence number is
// implicit (line order); an explicit `seq=<n>` key is accepted on input and
// must match the implicit value.

#include <array>
#include <charconv>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ipi/error.hpp"

namespace ipi {

enum class PointKind : std::uint8_t {
  IHEntry,
  IHExit,
  RunTaskEntry,
  RunTaskExit,
  PostTaskEntry,
  PostOk,
  PostFail,
  Other,
};

inline constexpr std::array<std::string_view, 8> kPointKindNames = {
    "IHEntry", "IHExit", "RunTaskEntry", "RunTaskExit",
    "PostTaskEntry", "PostOk", "PostFail", "Other"};

inline std::string_view to_string(PointKind kind) {
  return kPointKindNames[static_cast<std::size_t>(kind)];
}

inline std::optional<PointKind> parse_point_kind(std::string_view text) {
  for (std::size_t i = 0; i < kPointKindNames.size(); ++i)
    if (kPointKindNames[i] == text) return static_cast<PointKind>(i);
  return std::nullopt;
}

constexpr bool carries_irq(PointKind kind) {
  return kind == PointKind::IHEntry || kind == PointKind::IHExit;
}

constexpr bool carries_task(PointKind kind) {
  return kind == PointKind::RunTaskEntry || kind == PointKind::RunTaskExit ||
         kind == PointKind::PostTaskEntry || kind == PointKind::PostOk ||
         kind == PointKind::PostFail;
}

constexpr bool is_exit(PointKind kind) {
  return kind == PointKind::IHExit || kind == PointKind::RunTaskExit;
}

inline bool is_task_token(std::string_view name) {
  if (name.empty()) return false;
  for (char c : name) {
    bool ok = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
              c == '_' || c == '$';
    if (!ok) return false;
  }
  return true;
}

// One instruction-level occurrence. Field presence is fixed by the kind and
// checked by the factories, so a constructed Event is always well formed.
class Event {
 public:
  static Event ih_entry(std::uint32_t irq) { return interrupt(PointKind::IHEntry, irq); }
  static Event ih_exit(std::uint32_t irq) { return interrupt(PointKind::IHExit, irq); }
  static Event run_task_entry(std::string task) { return task_point(PointKind::RunTaskEntry, std::move(task)); }
  static Event run_task_exit(std::string task) { return task_point(PointKind::RunTaskExit, std::move(task)); }
  static Event post_task_entry(std::string task) { return task_point(PointKind::PostTaskEntry, std::move(task)); }
  static Event post_ok(std::string task) { return task_point(PointKind::PostOk, std::move(task)); }
  static Event post_fail(std::string task) { return task_point(PointKind::PostFail, std::move(task)); }
  static Event other() { return Event(PointKind::Other, 0, {}); }

  static Event interrupt(PointKind kind, std::uint32_t irq) {
    if (!carries_irq(kind))
      throw std::invalid_argument(std::string(to_string(kind)) + " does not carry an irq");
    if (irq == 0) throw std::invalid_argument("irq must be positive");
    return Event(kind, irq, {});
  }

  static Event task_point(PointKind kind, std::string task) {
    if (!carries_task(kind))
      throw std::invalid_argument(std::string(to_string(kind)) + " does not carry a task");
    if (!is_task_token(task)) throw std::invalid_argument("invalid task name '" + task + "'");
    return Event(kind, 0, std::move(task));
  }

  std::uint64_t seq() const noexcept { return seq_; }
  PointKind kind() const noexcept { return kind_; }
  // 0 when the kind carries no irq.
  std::uint32_t irq() const noexcept { return irq_; }
  // Empty when the kind carries no task.
  const std::string& task() const noexcept { return task_; }

  void set_seq(std::uint64_t seq) noexcept { seq_ = seq; }
  Event with_seq(std::uint64_t seq) const {
    Event copy = *this;
    copy.seq_ = seq;
    return copy;
  }

  friend bool operator==(const Event&, const Event&) = default;

 private:
  Event(PointKind kind, std::uint32_t irq, std::string task)
      : kind_(kind), irq_(irq), task_(std::move(task)) {}

  std::uint64_t seq_ = 0;
  PointKind kind_;
  std::uint32_t irq_;
  std::string task_;
};

// Assigns seq = position to every event.
inline std::vector<Event> numbered(std::vector<Event> events) {
  for (std::size_t i = 0; i < events.size(); ++i) events[i].set_seq(i);
  return events;
}

struct Inst {
  std::uint64_t id = 0;
  std::uint32_t itype = 0;

  static constexpr Inst non_interrupt() { return {}; }
  constexpr bool is_non_interrupt() const { return id == 0 && itype == 0; }
  constexpr bool valid() const { return (id == 0) == (itype == 0); }

  friend constexpr bool operator==(const Inst&, const Inst&) = default;
  friend constexpr auto operator<=>(const Inst&, const Inst&) = default;
};

enum class Pos : std::uint8_t { Start, End, Interm };

inline std::string_view to_string(Pos pos) {
  switch (pos) {
    case Pos::Start: return "START";
    case Pos::End: return "END";
    case Pos::Interm: return "INTERM";
  }
  return "?";
}

inline std::optional<Pos> parse_pos(std::string_view text) {
  if (text == "START") return Pos::Start;
  if (text == "END") return Pos::End;
  if (text == "INTERM") return Pos::Interm;
  return std::nullopt;
}

struct Label {
  Inst inst;
  Pos pos = Pos::Interm;

  friend constexpr bool operator==(const Label&, const Label&) = default;
};

inline std::string to_string(const Inst& inst) {
  return std::to_string(inst.id) + ":" + std::to_string(inst.itype);
}

inline std::string to_string(const Label& label) {
  return "(" + to_string(label.inst) + "," + std::string(to_string(label.pos)) + ")";
}

inline std::ostream& operator<<(std::ostream& os, const Inst& inst) { return os << to_string(inst); }
inline std::ostream& operator<<(std::ostream& os, const Label& label) { return os << to_string(label); }
inline std::ostream& operator<<(std::ostream& os, PointKind kind) { return os << to_string(kind); }

// Returns a reason string when `label` cannot legally annotate `event`.
inline std::optional<std::string> label_violation(const Event& event, const Label& label) {
  if (!label.inst.valid()) return "instance id and type must both be zero or both non-zero";
  if (label.pos == Pos::Start && event.kind() != PointKind::IHEntry)
    return "START only allowed on IHEntry";
  if (label.pos == Pos::End && !is_exit(event.kind()))
    return "END only allowed on IHExit or RunTaskExit";
  return std::nullopt;
}

struct LabeledEvent {
  Event event;
  std::optional<Label> label;
  std::optional<Label> truth;

  friend bool operator==(const LabeledEvent&, const LabeledEvent&) = default;
};

inline std::vector<Event> events_of(std::span<const LabeledEvent> labeled) {
  std::vector<Event> out;
  out.reserve(labeled.size());
  for (const auto& le : labeled) out.push_back(le.event);
  return out;
}

inline std::optional<std::vector<Label>> truth_of(std::span<const LabeledEvent> labeled) {
  std::vector<Label> out;
  out.reserve(labeled.size());
  for (const auto& le : labeled) {
    if (!le.truth) return std::nullopt;
    out.push_back(*le.truth);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

inline void write_event(std::ostream& os, const LabeledEvent& le, bool with_labels) {
  const Event& e = le.event;
  os << to_string(e.kind());
  if (carries_irq(e.kind())) os << " irq=" << e.irq();
  if (carries_task(e.kind())) os << " task=" << e.task();
  if (with_labels && le.label)
    os << " inst=" << to_string(le.label->inst) << " pos=" << to_string(le.label->pos);
  if (le.truth) os << " truth=" << to_string(le.truth->inst) << ':' << to_string(le.truth->pos);
  os << '\n';
}

// Truth annotations are always written when present; `with_labels` controls
// the identifier's inst/pos columns.
inline void write_trace(std::ostream& os, std::span<const LabeledEvent> events, bool with_labels) {
  for (const auto& le : events) write_event(os, le, with_labels);
}

inline void write_trace(std::ostream& os, std::span<const Event> events) {
  for (const auto& e : events) write_event(os, LabeledEvent{e, std::nullopt, std::nullopt}, false);
}

inline std::string write_trace(std::span<const LabeledEvent> events, bool with_labels) {
  std::ostringstream os;
  write_trace(os, events, with_labels);
  return std::move(os).str();
}

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

template <typename Int>
std::optional<Int> parse_uint(std::string_view text) {
  if (text.empty()) return std::nullopt;
  Int value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

inline std::optional<Inst> parse_inst(std::string_view text) {
  auto colon = text.find(':');
  if (colon == std::string_view::npos) return std::nullopt;
  auto id = parse_uint<std::uint64_t>(text.substr(0, colon));
  auto itype = parse_uint<std::uint32_t>(text.substr(colon + 1));
  if (!id || !itype) return std::nullopt;
  return Inst{*id, *itype};
}

inline std::optional<Label> parse_truth(std::string_view text) {
  auto colon = text.rfind(':');
  if (colon == std::string_view::npos) return std::nullopt;
  auto inst = parse_inst(text.substr(0, colon));
  auto pos = parse_pos(text.substr(colon + 1));
  if (!inst || !pos) return std::nullopt;
  return Label{*inst, *pos};
}

}  // namespace detail

// Streaming reader: pulls one event at a time from a text stream.
class TraceReader {
 public:
  explicit TraceReader(std::istream& in) : in_(in) {}

  std::optional<LabeledEvent> next() {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (line.empty() || line.front() == '#') continue;
      return parse_line(line);
    }
    return std::nullopt;
  }

  std::uint64_t line_number() const noexcept { return line_no_; }

 private:
  [[noreturn]] void fail(const std::string& reason) const {
    throw Error(Errc::MalformedLine, reason, line_no_);
  }

  LabeledEvent parse_line(std::string_view line) {
    std::vector<std::string_view> tokens;
    std::size_t start = 0;
    while (start <= line.size()) {
      auto end = line.find(' ', start);
      if (end == std::string_view::npos) end = line.size();
      if (end == start) fail("empty field (repeated or trailing space)");
      tokens.push_back(line.substr(start, end - start));
      start = end + 1;
    }

    auto kind = parse_point_kind(tokens.front());
    if (!kind) fail("unknown kind '" + std::string(tokens.front()) + "'");

    std::optional<std::uint32_t> irq;
    std::optional<std::string_view> task;
    std::optional<std::uint64_t> seq;
    std::optional<Inst> inst;
    std::optional<Pos> pos;
    std::optional<Label> truth;

    auto once = [this](auto& slot, std::string_view key) {
      if (slot) fail("duplicate key '" + std::string(key) + "'");
    };

    for (std::size_t i = 1; i < tokens.size(); ++i) {
      auto tok = tokens[i];
      auto eq = tok.find('=');
      if (eq == std::string_view::npos) fail("expected key=value, got '" + std::string(tok) + "'");
      auto key = tok.substr(0, eq);
      auto value = tok.substr(eq + 1);
      if (key == "irq") {
        once(irq, key);
        irq = detail::parse_uint<std::uint32_t>(value);
        if (!irq || *irq == 0) fail("irq must be a positive decimal integer");
      } else if (key == "task") {
        once(task, key);
        if (!is_task_token(value)) fail("task must match [A-Za-z0-9_$]+");
        task = value;
      } else if (key == "seq") {
        once(seq, key);
        seq = detail::parse_uint<std::uint64_t>(value);
        if (!seq) fail("seq must be a decimal integer");
      } else if (key == "inst") {
        once(inst, key);
        inst = detail::parse_inst(value);
        if (!inst) fail("inst must be <id>:<itype>");
      } else if (key == "pos") {
        once(pos, key);
        pos = parse_pos(value);
        if (!pos) fail("pos must be START, END or INTERM");
      } else if (key == "truth") {
        once(truth, key);
        truth = detail::parse_truth(value);
        if (!truth) fail("truth must be <id>:<itype>:<POS>");
      } else {
        fail("unknown key '" + std::string(key) + "'");
      }
    }

    if (carries_irq(*kind) != irq.has_value())
      fail(carries_irq(*kind) ? "irq required" : "irq not allowed for this kind");
    if (carries_task(*kind) != task.has_value())
      fail(carries_task(*kind) ? "task required" : "task not allowed for this kind");
    if (inst.has_value() != pos.has_value()) fail("inst and pos must appear together");
    if (seq && *seq != next_seq_)
      fail("explicit seq " + std::to_string(*seq) + " does not match position " +
           std::to_string(next_seq_));

    Event event = carries_irq(*kind)    ? Event::interrupt(*kind, *irq)
                  : carries_task(*kind) ? Event::task_point(*kind, std::string(*task))
                                        : Event::other();
    event.set_seq(next_seq_++);

    LabeledEvent out{std::move(event), std::nullopt, truth};
    if (inst) out.label = Label{*inst, *pos};
    if (out.label)
      if (auto why = label_violation(out.event, *out.label)) fail("label: " + *why);
    if (out.truth)
      if (auto why = label_violation(out.event, *out.truth)) fail("truth: " + *why);
    return out;
  }

  std::istream& in_;
  std::uint64_t line_no_ = 0;
  std::uint64_t next_seq_ = 0;
};

inline std::vector<LabeledEvent> parse_labeled_trace(std::istream& in) {
  TraceReader reader(in);
  std::vector<LabeledEvent> out;
  while (auto le = reader.next()) out.push_back(std::move(*le));
  return out;
}

inline std::vector<LabeledEvent> parse_labeled_trace(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_labeled_trace(in);
}

// Label and truth columns, when present, are validated and then dropped.
inline std::vector<Event> parse_trace(std::istream& in) {
  TraceReader reader(in);
  std::vector<Event> out;
  while (auto le = reader.next()) out.push_back(std::move(le->event));
  return out;
}

inline std::vector<Event> parse_trace(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_trace(in);
}

}  // namespace ipi
