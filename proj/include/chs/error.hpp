#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace chs {

// Base for every library failure. The CLI maps these to exit status 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class LinearDependenceError : public Error {
 public:
  LinearDependenceError(std::size_t index, double pivot)
      : Error("matrix " + std::to_string(index) + " is linearly dependent on the preceding family (pivot " +
              std::to_string(pivot) + ")"),
        index_(index),
        pivot_(pivot) {}
  std::size_t index() const noexcept { return index_; }
  double pivot() const noexcept { return pivot_; }

 private:
  std::size_t index_;
  double pivot_;
};

// A target tensor failed one or more of the adjunction preconditions.
class TargetError : public Error {
 public:
  using Error::Error;
};

// Two pinned one-Y values in the same orbit disagree.
class PinningError : public Error {
 public:
  using Error::Error;
};

// Linear solve or range condition failed.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, double residual) : Error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class AssemblyError : public Error {
 public:
  AssemblyError(const std::string& what, double min_eigenvalue) : Error(what), min_eigenvalue_(min_eigenvalue) {}
  double min_eigenvalue() const noexcept { return min_eigenvalue_; }

 private:
  double min_eigenvalue_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

}  // namespace chs
