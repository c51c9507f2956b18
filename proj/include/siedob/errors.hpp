#pragma once

#include <stdexcept>
#include <string>

namespace siedob {

/// Shapes or spatial sizes of the operands disagree.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Input values violate a documented precondition.
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A pipeline stage was requested whose weights are not loaded.
struct StageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Non-finite loss or gradient encountered during an optimizer step.
struct TrainingFault : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NoStylesError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace siedob
