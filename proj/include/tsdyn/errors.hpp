#pragma once

#include <stdexcept>
#include <string>

namespace tsdyn {

/// Input outside the domain of an operation (off-scale point, bad range, malformed spec).
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// E + mu*A is singular somewhere it is needed.
class RegressivityError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Real logarithm requested for a matrix with spectrum on (-inf, 0].
class BranchError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A numerical certificate (residual, invariance, dichotomy fit) did not hold.
class CertificationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A structural hypothesis of the theory (Conditions I-IV, hyperbolicity) is violated.
class ConditionViolation : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace tsdyn
