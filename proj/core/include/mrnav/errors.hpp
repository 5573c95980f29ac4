#pragma once

#include <stdexcept>
#include <string>

namespace mrnav {

// Base of every recoverable error raised by the library. `code()` is the
// stable tag that also travels in telemetry Error messages.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

#define MRNAV_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                      \
   public:                                                         \
    explicit Name(const std::string& what) : Error(#Name, what) {} \
  };

MRNAV_DEFINE_ERROR(FrameMismatch)
MRNAV_DEFINE_ERROR(OutOfBounds)
MRNAV_DEFINE_ERROR(NoPath)
MRNAV_DEFINE_ERROR(StartOccupied)
MRNAV_DEFINE_ERROR(NoFreeCell)
MRNAV_DEFINE_ERROR(SingularSystem)
MRNAV_DEFINE_ERROR(ModeError)
MRNAV_DEFINE_ERROR(TaskMismatch)
MRNAV_DEFINE_ERROR(NoTrajectory)
MRNAV_DEFINE_ERROR(MixedRuns)
MRNAV_DEFINE_ERROR(MalformedFrame)
MRNAV_DEFINE_ERROR(UnknownType)
MRNAV_DEFINE_ERROR(SchemaViolation)
MRNAV_DEFINE_ERROR(ConfigError)

#undef MRNAV_DEFINE_ERROR

}  // namespace mrnav
