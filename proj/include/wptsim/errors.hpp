#pragma once
#include <stdexcept>
#include <string>

namespace wptsim {

// Exit-code mapping for the CLI: ConfigError -> 1, SolverError (and
// subclasses) -> 2, threshold failures in --check mode -> 3.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Operating point does not exist (e.g. constant-power demand above what the
// link can deliver at the given drive).
struct InfeasibleError : SolverError {
    using SolverError::SolverError;
};

} // namespace wptsim
