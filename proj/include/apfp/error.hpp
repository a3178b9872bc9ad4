#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace apfp {

enum class ErrorKind {
  InvalidElement,
  DescriptorMismatch,
  SingularInput,
  NotPositive,
  NotUnitary,
  BranchCut,
  OutOfDomain,
  SingularValueOnPath,
  InvalidPath,
  NoConvergence,
  NotALoop,
  NotUnitaryPath,
  PartitionOverflow,
  DeterminantNotOne,
  NotInClosure,
  RankMismatch,
  RankTooHighForDensity,
  InconsistentFlags,
  ParseError,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Every failure raised by the library carries a machine-readable kind so the
// CLI can map it onto its exit-code contract.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace apfp
