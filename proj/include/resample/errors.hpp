#pragma once

#include <stdexcept>
#include <string>

namespace resample {

// Bad input to a run: unknown object ids, malformed instances or configs.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A setting's rules were broken during a run (a job lost every routine, a walk
// reached an isolated vertex, an illegal table-game selection). Runs abort.
struct SettingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConstraintViolation : SettingError {
    using SettingError::SettingError;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace resample
