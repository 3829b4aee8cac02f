#pragma once

#include <stdexcept>
#include <string>

namespace qm {

enum class Errc {
  InvalidPermutation,
  NonQuadFace,
  EulerViolation,
  NotConnected,
  BadHole,
  PerimeterMismatch,
  NotAHole,
  DartNotOnBoundary,
  NotActive,
  SplitArityMismatch,
  NotSubmap,
  AlgorithmReturnedInactiveDart,
  BadCode,
  OutOfBounds,
  BudgetExceeded,
  DivisionByZero,
  TailToleranceNotMet,
  CensusMissing,
  EmptyClass,
  EventNeverHit,
  DegenerateTable,
  PreconditionViolation,
  WrongPerimeter,
  TooManyFaces,
  SingularForm,
  MissingSpin,
  BinTooThin,
  NonpositiveLength,
  QuadratureFailure,
  BadGrid,
  CapUnsatisfiable,
  InsufficientHits,
  Usage,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what, int detail = -1)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what),
        code_(code),
        detail_(detail) {}
  Errc code() const { return code_; }
  // Offending face/hole/dart id when the error concerns one, else -1.
  int detail() const { return detail_; }

 private:
  Errc code_;
  int detail_;
};

}  // namespace qm
