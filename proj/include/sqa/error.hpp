#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sqa {

enum class ErrorCode {
  kIngestion,
  kInvalidInput,
  kAssembly,
  kInvalidFacet,
  kQuerySyntax,
  kProviderUnavailable,
  kEmptyCompletion,
  kInvalidTool,
  kInvalidArguments,
  kPlannerParse,
  kInvalidPlan,
  kEmptyDependency,
  kComposition,
  kSampling,
  kConfig,
};

std::string_view to_string(ErrorCode code);

/// Base exception for every failure the library reports. The code lets
/// callers (the HTTP layer, the executor) map failures without string
/// matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace sqa
