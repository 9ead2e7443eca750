#pragma once

namespace ldla {

/// Neumaier's variant of Kahan summation.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    double t = sum_ + x;
    if (__builtin_fabs(sum_) >= __builtin_fabs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Sum_{j >= k} j^{-s} for integer k >= 1 and real s > 0, s != 1
/// (analytic continuation for s < 1). Euler-Maclaurin with the explicit
/// part started no lower than j = 32; relative error is near round-off.
double hurwitz_zeta(double s, double k);

/// Riemann zeta for real s != 1. Negative arguments go through the
/// functional equation.
double riemann_zeta(double s);

}  // namespace ldla
