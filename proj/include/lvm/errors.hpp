#pragma once

#include <stdexcept>
#include <string>

namespace lvm {

// Every failure the library reports derives from Error. code() is the
// stable machine-readable name surfaced by the CLI.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual const char* code() const noexcept = 0;
};

#define LVM_DECLARE_ERROR(Name)                                          \
  class Name : public Error {                                            \
   public:                                                               \
    explicit Name(const std::string& what) : Error(what) {}              \
    const char* code() const noexcept override { return #Name; }         \
  };

LVM_DECLARE_ERROR(DimensionError)
LVM_DECLARE_ERROR(PreconditionError)
LVM_DECLARE_ERROR(RankError)
LVM_DECLARE_ERROR(SizeError)
LVM_DECLARE_ERROR(HessianError)
LVM_DECLARE_ERROR(SeparationError)
LVM_DECLARE_ERROR(VersionError)
LVM_DECLARE_ERROR(KindMismatchError)
LVM_DECLARE_ERROR(UsageError)
LVM_DECLARE_ERROR(IoError)

#undef LVM_DECLARE_ERROR

class SingularityError : public Error {
 public:
  explicit SingularityError(const std::string& matrix)
      : Error("singular matrix: " + matrix), matrix_(matrix) {}
  const char* code() const noexcept override { return "SingularityError"; }
  const std::string& matrix() const noexcept { return matrix_; }

 private:
  std::string matrix_;
};

class EmptyComponentError : public Error {
 public:
  explicit EmptyComponentError(int component)
      : Error("component " + std::to_string(component) + " has no responsibility mass"),
        component_(component) {}
  const char* code() const noexcept override { return "EmptyComponentError"; }
  int component() const noexcept { return component_; }

 private:
  int component_;
};

class NumericalDivergenceError : public Error {
 public:
  explicit NumericalDivergenceError(int iteration)
      : Error("non-finite free energy at iteration " + std::to_string(iteration)),
        iteration_(iteration) {}
  const char* code() const noexcept override { return "NumericalDivergenceError"; }
  int iteration() const noexcept { return iteration_; }

 private:
  int iteration_;
};

class UnderflowError : public Error {
 public:
  UnderflowError(int step, const std::string& detail)
      : Error("underflow at step " + std::to_string(step) + ": " + detail), step_(step) {}
  const char* code() const noexcept override { return "UnderflowError"; }
  int step() const noexcept { return step_; }

 private:
  int step_;
};

class ConvergenceError : public Error {
 public:
  explicit ConvergenceError(double residual)
      : Error("no convergence; residual " + std::to_string(residual)), residual_(residual) {}
  const char* code() const noexcept override { return "ConvergenceError"; }
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class ParseError : public Error {
 public:
  ParseError(long row, long column, const std::string& detail)
      : Error("parse error at row " + std::to_string(row) + ", column " +
              std::to_string(column) + ": " + detail),
        row_(row),
        column_(column) {}
  const char* code() const noexcept override { return "ParseError"; }
  long row() const noexcept { return row_; }
  long column() const noexcept { return column_; }

 private:
  long row_;
  long column_;
};

}  // namespace lvm
