#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace ipi {

enum class Errc {
  MalformedLine,
  UnbalancedIHExit,
  OrphanRunTaskEntry,
  Unbalanced,
  Undrained,
  LengthMismatch,
  ConfigInvalid,
  ScenarioInvalid,
  MissingLabels,
};

inline const char* errc_name(Errc code) {
  switch (code) {
    case Errc::MalformedLine: return "MalformedLine";
    case Errc::UnbalancedIHExit: return "UnbalancedIHExit";
    case Errc::OrphanRunTaskEntry: return "OrphanRunTaskEntry";
    case Errc::Unbalanced: return "Unbalanced";
    case Errc::Undrained: return "Undrained";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::ConfigInvalid: return "ConfigInvalid";
    case Errc::ScenarioInvalid: return "ScenarioInvalid";
    case Errc::MissingLabels: return "MissingLabels";
  }
  return "Unknown";
}

// Every failure raised by the library. `where` carries the 1-based line
// number for MalformedLine and the event seq for structural trace errors.
class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string detail, std::optional<std::uint64_t> where = std::nullopt)
      : std::runtime_error(format(code, detail, where)),
        code_(code),
        detail_(std::move(detail)),
        where_(where) {}

  Errc code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }
  std::optional<std::uint64_t> where() const noexcept { return where_; }

 private:
  static std::string format(Errc code, const std::string& detail,
                            std::optional<std::uint64_t> where) {
    std::string msg = errc_name(code);
    if (where) {
      msg += code == Errc::MalformedLine ? " at line " : " at seq ";
      msg += std::to_string(*where);
    }
    if (!detail.empty()) {
      msg += ": ";
      msg += detail;
    }
    return msg;
  }

  Errc code_;
  std::string detail_;
  std::optional<std::uint64_t> where_;
};

}  // namespace ipi
