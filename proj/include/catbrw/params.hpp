#pragma once

#include <stdexcept>

namespace catbrw {

// Model constants: dimension d, branch rate lambda off the origin, branch
// rate lambda0 at the origin. The jump rate is 1 everywhere. epsilon() is
// the branch-rate surplus lambda0 - lambda.
struct ModelParams {
  int d = 1;
  double lambda = 0.0;
  double lambda0 = 0.0;

  double epsilon() const { return lambda0 - lambda; }

  // Rate table lambda_x: lambda0 at the origin, lambda elsewhere.
  double rate_at(bool at_origin) const { return at_origin ? lambda0 : lambda; }

  void validate() const {
    if (d < 1 || d > 6) throw std::invalid_argument("ModelParams: d must be in [1,6]");
    if (lambda < 0.0) throw std::invalid_argument("ModelParams: lambda must be >= 0");
    if (lambda0 < lambda) throw std::invalid_argument("ModelParams: lambda0 must be >= lambda");
  }

  // The full simulator additionally needs lambda > 0; the catalyst-only
  // comparison process is the one place lambda = 0 is allowed.
  void validate_positive_lambda() const {
    validate();
    if (lambda <= 0.0) throw std::invalid_argument("ModelParams: lambda must be > 0 for this operation");
  }
};

}  // namespace catbrw
