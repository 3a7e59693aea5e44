#pragma once

#include <stdexcept>
#include <string>

namespace shearflow {

// A symmetric tensor handed to a square-root / inverse routine was not
// positive definite (within the conditioning tolerance).
class NotPositiveDefinite : public std::runtime_error {
public:
  explicit NotPositiveDefinite(const std::string& what) : std::runtime_error(what) {}
};

// The stress integration produced a tensor with non-positive trace or a
// lost positivity certificate.
class DegenerateStress : public std::runtime_error {
public:
  explicit DegenerateStress(const std::string& what) : std::runtime_error(what) {}
};

// An adaptive integrator could not reach the requested accuracy (step size
// underflow or step budget exhausted), or a retried stochastic step failed.
class StepFailure : public std::runtime_error {
public:
  explicit StepFailure(const std::string& what) : std::runtime_error(what) {}
};

// An explicit grid step was requested with a time step above the stability
// limit of the current coefficients.
class CFLViolation : public std::runtime_error {
public:
  explicit CFLViolation(const std::string& what) : std::runtime_error(what) {}
};

// A collision candidate exceeded the majorant rate used by the rejection
// sampler; the step must be retried with a refreshed majorant.
class MajorantExceeded : public std::runtime_error {
public:
  explicit MajorantExceeded(const std::string& what) : std::runtime_error(what) {}
};

// A moment-matrix entry was requested outside the legal index set.
class IndexRangeError : public std::out_of_range {
public:
  explicit IndexRangeError(const std::string& what) : std::out_of_range(what) {}
};

// A fit was requested on a series with too few usable points.
class InsufficientData : public std::runtime_error {
public:
  explicit InsufficientData(const std::string& what) : std::runtime_error(what) {}
};

// A criteria registry referenced an unknown check name.
class UnknownCriterion : public std::runtime_error {
public:
  explicit UnknownCriterion(const std::string& what) : std::runtime_error(what) {}
};

// Configuration parsing failed; carries the full list of field-level issues.
class ParseError : public std::runtime_error {
public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace shearflow
