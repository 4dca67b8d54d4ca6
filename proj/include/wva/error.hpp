#pragma once

#include <stdexcept>
#include <string>

namespace wva {

/// Coarse classification used by the CLI to pick an exit code.
enum class ErrorCategory {
  configuration,  // bad parameters or inputs
  numerical,      // a singular or non-convergent computation
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

#define WVA_DEFINE_ERROR(Name, Category)                                 \
  class Name : public Error {                                            \
   public:                                                               \
    explicit Name(const std::string& what)                               \
        : Error(ErrorCategory::Category, std::string(#Name ": ") + what) {} \
  }

WVA_DEFINE_ERROR(ConfigError, configuration);
WVA_DEFINE_ERROR(InvalidGrid, configuration);
WVA_DEFINE_ERROR(GridMismatch, configuration);
WVA_DEFINE_ERROR(WidthOutOfRange, configuration);
WVA_DEFINE_ERROR(BoundaryLeakage, configuration);
WVA_DEFINE_ERROR(EllOutOfRange, configuration);
WVA_DEFINE_ERROR(PostSelectionSingular, numerical);
WVA_DEFINE_ERROR(WeakValueSingular, numerical);
WVA_DEFINE_ERROR(FitDiverged, numerical);
WVA_DEFINE_ERROR(InsufficientData, numerical);

#undef WVA_DEFINE_ERROR

}  // namespace wva
