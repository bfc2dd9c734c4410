#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace modforge {

enum class ErrorKind {
  Parse,
  Validation,
  Conflict,
  NotFound,
  Assembly,
  Range,
  Topology,
  Model,
  Limit,
  Contract,
  Customization,
  Io,
};

std::string_view to_string(ErrorKind kind);

/// Every failure carries the pipeline stage and the entity it concerns so
/// the CLI and the service can report a structured diagnostic.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string stage, std::string entity, const std::string& message)
      : std::runtime_error(message),
        kind_(kind),
        stage_(std::move(stage)),
        entity_(std::move(entity)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& stage() const noexcept { return stage_; }
  const std::string& entity() const noexcept { return entity_; }

 private:
  ErrorKind kind_;
  std::string stage_;
  std::string entity_;
};

}  // namespace modforge
