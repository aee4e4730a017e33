#pragma once

#include <stdexcept>
#include <string>

namespace zzcw {

/// Parameters outside the supported (beta, h) regimes.
class RegimeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A caller-supplied object broke its declared contract (e.g. a rate exceeding its bound).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// exp(-Psi) is not integrable, so no stationary probability density exists.
class DivergentNormalization : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Lyapunov constants could not be selected because the tail rates do not separate.
class LyapunovConstantError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A hard step, event or size cap was hit.
class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace zzcw
