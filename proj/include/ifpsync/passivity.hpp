#pragma once

#include <complex>
#include <initializer_list>
#include <limits>
#include <span>
#include <vector>

namespace ifpsync::passivity {

using Complex = std::complex<double>;

/// Real polynomial stored in ascending order: coeffs()[k] multiplies x^k.
/// Trailing zeros are trimmed, so the zero polynomial has no coefficients.
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(std::vector<double> ascending);
  Polynomial(std::initializer_list<double> ascending)
      : Polynomial(std::vector<double>(ascending)) {}

  const std::vector<double>& coeffs() const { return coeffs_; }
  bool is_zero() const { return coeffs_.empty(); }
  /// -1 for the zero polynomial.
  int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
  double leading() const { return coeffs_.empty() ? 0.0 : coeffs_.back(); }
  double operator[](int k) const {
    return k >= 0 && k < static_cast<int>(coeffs_.size()) ? coeffs_[k] : 0.0;
  }

  Complex operator()(Complex x) const;
  double operator()(double x) const;
  /// Sum of |c_k| |x|^k, the magnitude scale used for cancellation checks.
  double abs_scale(double abs_x) const;

  Polynomial derivative() const;
  /// Roots via the eigenvalues of the companion matrix.
  std::vector<Complex> roots() const;

  friend Polynomial operator*(const Polynomial& a, const Polynomial& b);
  friend Polynomial operator*(double c, const Polynomial& a);

 private:
  std::vector<double> coeffs_;
};

/// W(x) = num(x) / den(x), proper (deg num <= deg den).
class RationalTF {
 public:
  /// Throws ZeroPolynomial for a zero denominator and
  /// ImproperTransferFunction when deg num > deg den.
  RationalTF(Polynomial num, Polynomial den);

  const Polynomial& num() const { return num_; }
  const Polynomial& den() const { return den_; }
  bool strictly_proper() const { return num_.degree() < den_.degree(); }
  /// lim W(i w) as w -> infinity (the feedthrough).
  double high_frequency_gain() const;

  Complex operator()(Complex s) const { return num_(s) / den_(s); }

 private:
  Polynomial num_;
  Polynomial den_;
};

/// W(i omega). Throws PoleOnAxis when the denominator vanishes to within
/// 1e-14 of its magnitude scale.
Complex eval_freq(const RationalTF& w, double omega);

/// True iff all roots have strictly negative real part (Routh array; any
/// non-positive first-column entry means not Hurwitz). Throws ZeroPolynomial
/// for the zero polynomial and InvalidArgument for constants.
bool routh_hurwitz(const Polynomial& p);

enum class IfpMethod { grid_refined, closed_form };

struct IfpCertificate {
  double alpha = 0.0;
  /// Minimizing frequency; +infinity when the infimum is the w -> inf limit.
  double omega_star = 0.0;
  IfpMethod method = IfpMethod::grid_refined;
  /// inf Re W(i w) before clamping; alpha = max(0, -raw_infimum).
  double raw_infimum = 0.0;
};

/// Frequency grid used for certification: 2000 log-spaced points on
/// [1e-6, 1e6].
std::vector<double> certification_grid();

/// Passivity index alpha = max(0, -inf_w Re W(i w)). Throws NotCertifiable
/// when W has a strictly unstable pole or an imaginary pole that is repeated
/// or has a residue that is not real and non-negative.
IfpCertificate ifp_index(const RationalTF& w);

struct PrlReport {
  bool no_unstable_poles = false;
  bool imaginary_poles_ok = false;
  bool freq_condition_ok = false;

  bool all() const { return no_unstable_poles && imaginary_poles_ok && freq_condition_ok; }
};

/// Positive-real-type conditions for IFP(alpha) of a SISO system given in
/// lowest terms.
PrlReport prl_conditions(const RationalTF& w, double alpha);

/// Classification of a denominator root.
struct PoleInfo {
  Complex location;
  bool imaginary = false;
  bool unstable = false;
  bool simple = true;
  Complex residue{0.0, 0.0};  // only meaningful for simple imaginary poles
};

std::vector<PoleInfo> classify_poles(const RationalTF& w);

/// Loop transformation u_hat = u + b y applied to an IFP(alpha) system.
struct IfpShift {
  double alpha = 0.0;
  double b = 0.0;
  double alpha_hat = 0.0;
  double gamma = 0.0;
};

/// Throws BOutOfRange unless 0 < b < 1/(2 alpha) (any b > 0 when alpha = 0).
IfpShift ifp_shift(double alpha, double b);

/// Checks y.u + alpha|u|^2 = (1 - 2 alpha b)(y.u_hat + alpha_hat|u_hat|^2 - gamma|y|^2)
/// with u_hat = u + b y. Returns |lhs - rhs| divided by max(1, magnitude of
/// the terms). Throws DimensionMismatch.
double ifp_shift_identity_check(double alpha, double b, std::span<const double> y,
                                std::span<const double> u);

}  // namespace ifpsync::passivity
