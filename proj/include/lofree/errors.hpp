#ifndef LOFREE_ERRORS_HPP
#define LOFREE_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lofree {

// Base for all library errors. The CLI maps these to exit code 2
// (data/config errors) except UpstreamError, which maps to 3.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(what) {}
};

// pool
class EmptyAfterNormalization : public Error {
 public:
  explicit EmptyAfterNormalization(const std::string& what) : Error(what) {}
};
class MismatchedCount : public Error {
 public:
  explicit MismatchedCount(const std::string& what) : Error(what) {}
};
class InsufficientData : public Error {
 public:
  explicit InsufficientData(const std::string& what) : Error(what) {}
};

// scoring
class UnknownResponse : public Error {
 public:
  explicit UnknownResponse(const std::string& what) : Error(what) {}
};
class DegeneratePool : public Error {
 public:
  explicit DegeneratePool(const std::string& what) : Error(what) {}
};
class ZeroVector : public Error {
 public:
  explicit ZeroVector(const std::string& what) : Error(what) {}
};

// embed
class EmptyText : public Error {
 public:
  explicit EmptyText(const std::string& what) : Error(what) {}
};
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};
class DimensionMismatch : public Error {
 public:
  explicit DimensionMismatch(const std::string& what) : Error(what) {}
};

// conformal
class EmptyCalibration : public Error {
 public:
  explicit EmptyCalibration(const std::string& what) : Error(what) {}
};
class NoFeasibleLambda : public Error {
 public:
  explicit NoFeasibleLambda(const std::string& what) : Error(what) {}
};

// metrics
class MisalignedInputs : public Error {
 public:
  explicit MisalignedInputs(const std::string& what) : Error(what) {}
};

// sampling
class UpstreamError : public Error {
 public:
  explicit UpstreamError(const std::string& what) : Error(what) {}
};
class PartialPool : public Error {
 public:
  PartialPool(const std::string& prompt_id, std::size_t obtained,
              std::size_t requested)
      : Error("prompt " + prompt_id + ": obtained " +
              std::to_string(obtained) + " of " + std::to_string(requested) +
              " samples"),
        obtained_(obtained),
        requested_(requested) {}
  std::size_t obtained() const { return obtained_; }
  std::size_t requested() const { return requested_; }

 private:
  std::size_t obtained_;
  std::size_t requested_;
};

// baselines
class MissingLogits : public Error {
 public:
  explicit MissingLogits(const std::string& what) : Error(what) {}
};

}  // namespace lofree

#endif  // LOFREE_ERRORS_HPP
