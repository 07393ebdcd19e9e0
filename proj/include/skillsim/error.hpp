#pragma once

#include <stdexcept>
#include <string>

namespace skillsim {

// Base class for all domain errors. `kind` is a stable machine-readable
// name (e.g. "DanglingLinkRef") so callers and tests can dispatch without
// string-matching the human message.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(kind + ": " + message), kind_(std::move(kind)) {}

  const std::string& kind() const { return kind_; }

 private:
  std::string kind_;
};

#define SKILLSIM_DEFINE_ERROR(Name)                      \
  class Name : public Error {                            \
   public:                                               \
    explicit Name(const std::string& message)            \
        : Error(#Name, message) {}                       \
  }

// urdf-model
SKILLSIM_DEFINE_ERROR(MalformedXml);
SKILLSIM_DEFINE_ERROR(DanglingLinkRef);
SKILLSIM_DEFINE_ERROR(KinematicCycle);
SKILLSIM_DEFINE_ERROR(InvalidTree);
SKILLSIM_DEFINE_ERROR(MissingLimits);
SKILLSIM_DEFINE_ERROR(DuplicateName);
SKILLSIM_DEFINE_ERROR(InvalidAsset);

// asset-physics
SKILLSIM_DEFINE_ERROR(DegenerateMesh);
SKILLSIM_DEFINE_ERROR(UnknownCategory);

// llm-gateway
SKILLSIM_DEFINE_ERROR(EmptyScene);
SKILLSIM_DEFINE_ERROR(EmptyQuery);
SKILLSIM_DEFINE_ERROR(NetworkError);
SKILLSIM_DEFINE_ERROR(MissingApiKey);
SKILLSIM_DEFINE_ERROR(ReplayMiss);
SKILLSIM_DEFINE_ERROR(BadResponse);

class HttpStatusError : public Error {
 public:
  HttpStatusError(int status, const std::string& body_excerpt)
      : Error("HttpStatusError",
              "status " + std::to_string(status) + ": " + body_excerpt),
        status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

// reward-dsl
class SyntaxError : public Error {
 public:
  SyntaxError(int line, int col, const std::string& expected)
      : Error("SyntaxError", "line " + std::to_string(line) + ", col " +
                                 std::to_string(col) + ": expected " + expected),
        line_(line), col_(col) {}
  int line() const { return line_; }
  int col() const { return col_; }

 private:
  int line_, col_;
};
SKILLSIM_DEFINE_ERROR(NegativeWeight);
SKILLSIM_DEFINE_ERROR(UnknownTermKind);

// task-gen
SKILLSIM_DEFINE_ERROR(NoTaskFound);
SKILLSIM_DEFINE_ERROR(RewardParseError);
SKILLSIM_DEFINE_ERROR(UnknownAsset);
SKILLSIM_DEFINE_ERROR(UnknownLink);
SKILLSIM_DEFINE_ERROR(UnknownJoint);
SKILLSIM_DEFINE_ERROR(TargetOutOfRange);
SKILLSIM_DEFINE_ERROR(IoError);
SKILLSIM_DEFINE_ERROR(SchemaVersionMismatch);

// sim-core
SKILLSIM_DEFINE_ERROR(OutOfWorkspace);
SKILLSIM_DEFINE_ERROR(EmptyTerminalBuffer);
SKILLSIM_DEFINE_ERROR(NoTargetPart);

// ppo-trainer
SKILLSIM_DEFINE_ERROR(NonFiniteLoss);

// curriculum
class SequenceAborted : public Error {
 public:
  SequenceAborted(int stage, const std::string& reason)
      : Error("SequenceAborted",
              "subtask " + std::to_string(stage) + ": " + reason),
        stage_(stage) {}
  int stage() const { return stage_; }

 private:
  int stage_;
};

#undef SKILLSIM_DEFINE_ERROR

}  // namespace skillsim
