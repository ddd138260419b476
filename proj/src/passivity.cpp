#include "ifpsync/passivity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>

#include <Eigen/Eigenvalues>

#include "ifpsync/error.hpp"
#include "ifpsync/kernels.hpp"

namespace ifpsync::passivity {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

constexpr double kGridLo = 1e-6;
constexpr double kGridHi = 1e6;
constexpr std::size_t kGridPoints = 2000;
constexpr double kRefineTol = 1e-10;

constexpr double kImagTol = 1e-9;       // |Re z| < kImagTol (1 + |Im z|)
constexpr double kSimpleTol = 1e-6;     // min distance to other roots
constexpr double kResidueTol = 1e-8;    // relative to 1 + |residue|
constexpr double kFreqCondTol = 1e-9;

// Golden-section search of f over [log lo, log hi].
std::pair<double, double> golden_min_log(const RationalTF& w, double lo, double hi) {
  constexpr double inv_phi = 0.6180339887498949;
  double a = std::log(lo);
  double b = std::log(hi);
  auto f = [&](double x) { return kernels::real_part_or_inf(w, std::exp(x)); };
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > kRefineTol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  const double x = 0.5 * (a + b);
  return {std::exp(x), f(x)};
}

// Limit of Re W(i w) as w -> 0 when W has a simple pole exactly at the origin:
// with g(s) = s W(s), Re W(i w) -> g'(0).
std::optional<double> origin_limit(const RationalTF& w) {
  const auto& den = w.den();
  if (den.is_zero() || den[0] != 0.0) return std::nullopt;
  std::vector<double> shifted(den.coeffs().begin() + 1, den.coeffs().end());
  const Polynomial d1(std::move(shifted));
  const double d10 = d1[0];
  if (d10 == 0.0) return std::nullopt;
  const auto& num = w.num();
  return (num[1] * d10 - num[0] * d1[1]) / (d10 * d10);
}

struct Candidate {
  double value;
  double omega;
};

// All points at which Re W(i w) is evaluated for certification: the grid,
// w = 0 (or its limit) and the high-frequency limit.
std::vector<Candidate> endpoint_candidates(const RationalTF& w) {
  std::vector<Candidate> out;
  const double at_zero = kernels::real_part_or_inf(w, 0.0);
  if (std::isfinite(at_zero)) {
    out.push_back({at_zero, 0.0});
  } else if (auto lim = origin_limit(w)) {
    out.push_back({*lim, 0.0});
  }
  out.push_back({w.high_frequency_gain(), kInf});
  return out;
}

bool residue_ok(Complex r) {
  const double tol = kResidueTol * (1.0 + std::abs(r));
  return r.real() >= -tol && std::abs(r.imag()) <= tol;
}

}  // namespace

// --- Polynomial -------------------------------------------------------------

Polynomial::Polynomial(std::vector<double> ascending) : coeffs_(std::move(ascending)) {
  for (double c : coeffs_)
    if (!std::isfinite(c)) throw Error(ErrorCode::InvalidArgument, "non-finite coefficient");
  while (!coeffs_.empty() && coeffs_.back() == 0.0) coeffs_.pop_back();
}

Complex Polynomial::operator()(Complex x) const {
  Complex acc{0.0, 0.0};
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * x + *it;
  return acc;
}

double Polynomial::operator()(double x) const {
  double acc = 0.0;
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * x + *it;
  return acc;
}

double Polynomial::abs_scale(double abs_x) const {
  double acc = 0.0;
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * abs_x + std::abs(*it);
  return acc;
}

Polynomial Polynomial::derivative() const {
  if (coeffs_.size() <= 1) return {};
  std::vector<double> d(coeffs_.size() - 1);
  for (std::size_t k = 1; k < coeffs_.size(); ++k) d[k - 1] = static_cast<double>(k) * coeffs_[k];
  return Polynomial(std::move(d));
}

std::vector<Complex> Polynomial::roots() const {
  const int n = degree();
  if (n < 1) return {};
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) companion(i, i - 1) = 1.0;
  for (int i = 0; i < n; ++i) companion(i, n - 1) = -coeffs_[i] / coeffs_[n];
  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
  const auto& ev = solver.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  if (a.is_zero() || b.is_zero()) return {};
  std::vector<double> out(a.coeffs_.size() + b.coeffs_.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.coeffs_.size(); ++i)
    for (std::size_t j = 0; j < b.coeffs_.size(); ++j) out[i + j] += a.coeffs_[i] * b.coeffs_[j];
  return Polynomial(std::move(out));
}

Polynomial operator*(double c, const Polynomial& a) {
  std::vector<double> out = a.coeffs_;
  for (double& x : out) x *= c;
  return Polynomial(std::move(out));
}

// --- RationalTF -------------------------------------------------------------

RationalTF::RationalTF(Polynomial num, Polynomial den) : num_(std::move(num)), den_(std::move(den)) {
  if (den_.is_zero()) throw Error(ErrorCode::ZeroPolynomial, "denominator is zero");
  if (num_.degree() > den_.degree())
    throw Error(ErrorCode::ImproperTransferFunction,
                "deg num = " + std::to_string(num_.degree()) +
                    " > deg den = " + std::to_string(den_.degree()));
}

double RationalTF::high_frequency_gain() const {
  return num_.degree() == den_.degree() ? num_.leading() / den_.leading() : 0.0;
}

Complex eval_freq(const RationalTF& w, double omega) {
  const Complex s{0.0, omega};
  const Complex d = w.den()(s);
  if (std::abs(d) <= 1e-14 * w.den().abs_scale(std::abs(omega)))
    throw Error(ErrorCode::PoleOnAxis, "pole at i*" + std::to_string(omega));
  return w.num()(s) / d;
}

// --- Routh-Hurwitz ----------------------------------------------------------

bool routh_hurwitz(const Polynomial& p) {
  if (p.is_zero()) throw Error(ErrorCode::ZeroPolynomial, "Routh test of the zero polynomial");
  const int n = p.degree();
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "Routh test needs degree >= 1");

  const double sign = p.leading() > 0 ? 1.0 : -1.0;
  const int width = n / 2 + 1;
  // Two most recent rows of the array, padded with zeros.
  std::vector<double> upper(width + 1, 0.0), lower(width + 1, 0.0);
  for (int j = 0; j < width; ++j) {
    upper[j] = sign * p[n - 2 * j];
    lower[j] = sign * p[n - 1 - 2 * j];
  }
  if (!(upper[0] > 0.0) || !(lower[0] > 0.0)) return false;
  for (int row = 2; row <= n; ++row) {
    std::vector<double> next(width + 1, 0.0);
    for (int j = 0; j < width; ++j)
      next[j] = (lower[0] * upper[j + 1] - upper[0] * lower[j + 1]) / lower[0];
    if (!(next[0] > 0.0)) return false;
    upper = std::move(lower);
    lower = std::move(next);
  }
  return true;
}

// --- IFP index ----------------------------------------------------------------

std::vector<double> certification_grid() { return kernels::log_grid(kGridLo, kGridHi, kGridPoints); }

std::vector<PoleInfo> classify_poles(const RationalTF& w) {
  const auto roots = w.den().roots();
  const Polynomial dden = w.den().derivative();
  std::vector<PoleInfo> poles;
  poles.reserve(roots.size());
  for (std::size_t i = 0; i < roots.size(); ++i) {
    PoleInfo info;
    info.location = roots[i];
    const double band = kImagTol * (1.0 + std::abs(roots[i].imag()));
    info.imaginary = std::abs(roots[i].real()) < band;
    info.unstable = roots[i].real() >= band;
    for (std::size_t j = 0; j < roots.size(); ++j)
      if (j != i && std::abs(roots[j] - roots[i]) <= kSimpleTol) info.simple = false;
    if (info.imaginary && info.simple) {
      // Residue of a simple pole: num(z) / den'(z), evaluated on the axis.
      const Complex z{0.0, roots[i].imag()};
      info.residue = w.num()(z) / dden(z);
    }
    poles.push_back(info);
  }
  return poles;
}

IfpCertificate ifp_index(const RationalTF& w) {
  for (const auto& pole : classify_poles(w)) {
    if (pole.unstable)
      throw Error(ErrorCode::NotCertifiable,
                  "unstable pole at " + std::to_string(pole.location.real()) + "+" +
                      std::to_string(pole.location.imag()) + "i");
    if (pole.imaginary && !pole.simple)
      throw Error(ErrorCode::NotCertifiable,
                  "repeated imaginary pole at i*" + std::to_string(pole.location.imag()));
    if (pole.imaginary && !residue_ok(pole.residue))
      throw Error(ErrorCode::NotCertifiable,
                  "imaginary pole at i*" + std::to_string(pole.location.imag()) +
                      " has residue " + std::to_string(pole.residue.real()) + "+" +
                      std::to_string(pole.residue.imag()) + "i");
  }

  IfpCertificate cert;
  if (w.num().degree() <= 0 && w.den().degree() == 0) {
    cert.method = IfpMethod::closed_form;
    cert.raw_infimum = w.num()[0] / w.den()[0];
    cert.omega_star = 0.0;
    cert.alpha = std::max(0.0, -cert.raw_infimum);
    return cert;
  }

  const auto grid = certification_grid();
  const auto values = kernels::real_part_sweep(w, grid);
  const auto best = kernels::argmin(values);

  Candidate winner{best.value, grid[best.index]};
  if (std::isfinite(best.value)) {
    const double lo = grid[best.index == 0 ? 0 : best.index - 1];
    const double hi = grid[std::min(best.index + 1, grid.size() - 1)];
    const auto [omega, value] = golden_min_log(w, lo, hi);
    if (value < winner.value) winner = {value, omega};
  }
  for (const auto& c : endpoint_candidates(w))
    if (c.value < winner.value) winner = c;

  cert.method = IfpMethod::grid_refined;
  cert.raw_infimum = winner.value;
  cert.omega_star = winner.omega;
  cert.alpha = std::max(0.0, -winner.value);
  return cert;
}

PrlReport prl_conditions(const RationalTF& w, double alpha) {
  PrlReport report;
  report.no_unstable_poles = true;
  report.imaginary_poles_ok = true;
  for (const auto& pole : classify_poles(w)) {
    if (pole.unstable) report.no_unstable_poles = false;
    if (pole.imaginary && (!pole.simple || !residue_ok(pole.residue)))
      report.imaginary_poles_ok = false;
  }

  const auto grid = certification_grid();
  const auto values = kernels::real_part_sweep(w, grid);
  report.freq_condition_ok = std::all_of(values.begin(), values.end(), [&](double v) {
    return !std::isfinite(v) || v + alpha >= -kFreqCondTol;
  });
  for (const auto& c : endpoint_candidates(w))
    if (c.value + alpha < -kFreqCondTol) report.freq_condition_ok = false;
  return report;
}

// --- IFP shift ----------------------------------------------------------------

IfpShift ifp_shift(double alpha, double b) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha))
    throw Error(ErrorCode::InvalidArgument, "alpha must be finite and >= 0");
  if (!(b > 0.0) || !std::isfinite(b) || (alpha > 0.0 && !(b < 1.0 / (2.0 * alpha))))
    throw Error(ErrorCode::BOutOfRange, "b = " + std::to_string(b) + " outside (0, 1/(2 alpha))");
  const double shrink = 1.0 - 2.0 * alpha * b;
  return {alpha, b, alpha / shrink, b * (1.0 - alpha * b) / shrink};
}

double ifp_shift_identity_check(double alpha, double b, std::span<const double> y,
                                std::span<const double> u) {
  if (y.size() != u.size())
    throw Error(ErrorCode::DimensionMismatch, "y has " + std::to_string(y.size()) +
                                                  " entries, u has " + std::to_string(u.size()));
  const IfpShift shift = ifp_shift(alpha, b);
  double yu = 0.0, uu = 0.0, yuh = 0.0, uhuh = 0.0, yy = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) {
    const double uh = u[k] + b * y[k];
    yu += y[k] * u[k];
    uu += u[k] * u[k];
    yuh += y[k] * uh;
    uhuh += uh * uh;
    yy += y[k] * y[k];
  }
  const double shrink = 1.0 - 2.0 * alpha * b;
  const double lhs = yu + alpha * uu;
  const double rhs = shrink * (yuh + shift.alpha_hat * uhuh - shift.gamma * yy);
  const double scale =
      std::abs(yu) + alpha * uu +
      std::abs(shrink) * (std::abs(yuh) + shift.alpha_hat * uhuh + shift.gamma * yy);
  return std::abs(lhs - rhs) / std::max(1.0, scale);
}

}  // namespace ifpsync::passivity
