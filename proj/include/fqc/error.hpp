#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fqc {

// Stable error categories. The string form is part of the CLI contract:
// every diagnostic is prefixed with "error[<code>]".
enum class Errc {
  dimension,
  degenerate_input,
  invalid_schedule,
  invalid_loss,
  config,
  invalid_input,
  size,
  scoring_incomplete,
  pairing,
  parse,
  referential_integrity,
  duplicate,
  coverage,
  schedule_consistency,
  io,
  session_state,
};

constexpr std::string_view code_name(Errc c) noexcept {
  switch (c) {
    case Errc::dimension: return "E_DIMENSION";
    case Errc::degenerate_input: return "E_DEGENERATE";
    case Errc::invalid_schedule: return "E_SCHEDULE";
    case Errc::invalid_loss: return "E_LOSS";
    case Errc::config: return "E_CONFIG";
    case Errc::invalid_input: return "E_INPUT";
    case Errc::size: return "E_SIZE";
    case Errc::scoring_incomplete: return "E_SCORING_INCOMPLETE";
    case Errc::pairing: return "E_PAIRING";
    case Errc::parse: return "E_PARSE";
    case Errc::referential_integrity: return "E_REFERENCE";
    case Errc::duplicate: return "E_DUPLICATE";
    case Errc::coverage: return "E_COVERAGE";
    case Errc::schedule_consistency: return "E_SCHEDULE_CONSISTENCY";
    case Errc::io: return "E_IO";
    case Errc::session_state: return "E_SESSION_STATE";
  }
  return "E_UNKNOWN";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

  std::string diagnostic() const {
    return "error[" + std::string(code_name(code_)) + "]: " + what();
  }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace fqc
