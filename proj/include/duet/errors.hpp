#pragma once

#include <stdexcept>
#include <string>

namespace duet {

// Tensor operand shapes disagree.
struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// An operation precondition was violated by the caller.
struct ContractError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input text. Carries a 1-based line number when known.
struct ParseError : std::runtime_error {
    long line = -1;
    explicit ParseError(const std::string& msg, long line_no = -1)
        : std::runtime_error(line_no >= 0 ? msg + " (line " + std::to_string(line_no) + ")" : msg),
          line(line_no) {}
};

// Structurally valid input with inconsistent content (unknown entity,
// zero-degree vertex, incompatible split).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite values where finite ones are required.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Optimization diverged; message includes a diagnostic dump.
struct TrainingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Checkpoint container problems, one kind per failure mode.
struct CheckpointError : std::runtime_error {
    enum class Kind { io, bad_magic, bad_version, truncated, corrupt };
    Kind kind;
    CheckpointError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

// Run configuration problems (malformed JSON, unknown key, out-of-range value).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace duet
