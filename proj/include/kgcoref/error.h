#ifndef KGCOREF_ERROR_H_
#define KGCOREF_ERROR_H_

#include <stdexcept>
#include <string>

namespace kgcoref {

// Base error. Every error carries the name of the module that raised it so
// the command-line front end can surface it.
class Error : public std::runtime_error {
 public:
  Error(std::string module, const std::string& message)
      : std::runtime_error(module + ": " + message), module_(std::move(module)) {}
  const std::string& module() const { return module_; }

 private:
  std::string module_;
};

// Malformed input text (bad JSON line, bad TSV row).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Well-formed input that violates a data invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A requested item does not exist.
class LookupError : public Error {
 public:
  using Error::Error;
};

// A gold antecedent is missing from the candidate set.
class CoverageError : public Error {
 public:
  using Error::Error;
};

// Non-finite values or shape mismatches in numerical code.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace kgcoref

#endif  // KGCOREF_ERROR_H_
