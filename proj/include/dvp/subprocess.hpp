#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dvp {

struct ProcessResult {
  int exit_code = -1;
  bool timed_out = false;
  std::vector<std::uint8_t> stdout_data;
  std::string stderr_text;
};

/// Runs `command` through /bin/sh -c, feeding `stdin_data` to the child and
/// collecting stdout (when asked) and stderr. A zero timeout waits forever.
ProcessResult run_shell(const std::string& command, std::span<const std::uint8_t> stdin_data, bool capture_stdout,
                        std::chrono::seconds timeout = std::chrono::seconds{0});

/// Single-quotes a string for /bin/sh.
std::string shell_quote(const std::string& s);

/// True when the first word of `command` names an executable on PATH (or an
/// existing executable path).
bool program_available(const std::string& command);

/// DVP_CODEC_TIMEOUT_SECS, or 0 (no timeout) when unset or malformed.
std::chrono::seconds codec_timeout_from_env();

}  // namespace dvp
