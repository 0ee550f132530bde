#pragma once

#include <stdexcept>
#include <string>

namespace pm {

// Base of every error raised by the library. Callers that only care about
// "the library rejected this input" catch pm::Error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define PM_DEFINE_ERROR(Name)                                  \
  class Name : public Error {                                  \
   public:                                                     \
    explicit Name(const std::string& what) : Error(what) {}    \
  }

PM_DEFINE_ERROR(AtomOutOfWindow);
PM_DEFINE_ERROR(DuplicateAtom);
PM_DEFINE_ERROR(InvalidArgument);
PM_DEFINE_ERROR(OrderTooLarge);
PM_DEFINE_ERROR(BudgetExceeded);
PM_DEFINE_ERROR(UnsupportedDimension);
PM_DEFINE_ERROR(IntegrationUnavailable);
PM_DEFINE_ERROR(KernelsUnavailable);
PM_DEFINE_ERROR(ProjectionUnavailable);
PM_DEFINE_ERROR(AnnotationMismatch);
PM_DEFINE_ERROR(ConfigError);

#undef PM_DEFINE_ERROR

}  // namespace pm
