#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace abg {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A game candidate failed validation; `violations` lists every problem found.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

#define ABG_DECLARE_ERROR(Name) \
  class Name : public Error {   \
   public:                      \
    using Error::Error;         \
  }

ABG_DECLARE_ERROR(NonAbsorbingProfile);
ABG_DECLARE_ERROR(UnsupportedExactEvaluation);
ABG_DECLARE_ERROR(EmptyWindow);
ABG_DECLARE_ERROR(SizeCapExceeded);
ABG_DECLARE_ERROR(UnsupportedPayoffForMinmax);
ABG_DECLARE_ERROR(SandwichViolation);
ABG_DECLARE_ERROR(NoEquilibriumFound);
ABG_DECLARE_ERROR(NoStableCluster);
ABG_DECLARE_ERROR(NoCaseMatched);
ABG_DECLARE_ERROR(InconsistentMinmax);
ABG_DECLARE_ERROR(InfeasibleEta);
ABG_DECLARE_ERROR(DeltaTooLarge);
ABG_DECLARE_ERROR(WitnessInvalid);
ABG_DECLARE_ERROR(PunisherNotCertified);
ABG_DECLARE_ERROR(KappaOutOfRange);
ABG_DECLARE_ERROR(StateCapExceeded);
ABG_DECLARE_ERROR(InvalidArgument);

#undef ABG_DECLARE_ERROR

}  // namespace abg
