#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include <unsupported/Eigen/Polynomials>

#include "ifpsync/error.hpp"
#include "ifpsync/passivity.hpp"

using namespace ifpsync;
using namespace ifpsync::passivity;
using Catch::Approx;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an ifpsync::Error");
  return ErrorCode::InvalidArgument;
}

RationalTF cubic(double p, double q) { return {Polynomial{1.0}, Polynomial{0.0, q, p, 1.0}}; }

// Closed-form minimization of Re W(i w) = -p / (p^2 w^2 + (q - w^2)^2).
double cubic_alpha(double p, double q) {
  return q > p * p / 2.0 ? 1.0 / (p * q - p * p * p / 4.0) : p / (q * q);
}

double cubic_grid_alpha(double p, double q) {
  double worst = 0.0;
  const int n = 1000000;
  for (int k = 0; k < n; ++k) {
    const double w = std::pow(10.0, -6.0 + 12.0 * k / (n - 1));
    const double re = -p / (p * p * w * w + (q - w * w) * (q - w * w));
    worst = std::min(worst, re);
  }
  return -worst;
}

// Max real part of the roots via Eigen's polynomial solver.
double max_real_root(const std::vector<double>& ascending) {
  Eigen::VectorXd c(static_cast<Eigen::Index>(ascending.size()));
  for (std::size_t k = 0; k < ascending.size(); ++k) c(static_cast<Eigen::Index>(k)) = ascending[k];
  Eigen::PolynomialSolver<double, Eigen::Dynamic> solver(c);
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& r : solver.roots()) m = std::max(m, r.real());
  return m;
}

}  // namespace

TEST_CASE("polynomial basics", "[passivity]") {
  Polynomial p{1.0, 2.0, 0.0, 0.0};
  CHECK(p.degree() == 1);
  CHECK(p.coeffs().size() == 2);
  CHECK(Polynomial{0.0, 0.0}.is_zero());
  CHECK(Polynomial{}.degree() == -1);
  CHECK(p(2.0) == 5.0);
  CHECK(p.derivative().coeffs() == std::vector<double>{2.0});
  const Polynomial prod = Polynomial{1.0, 1.0} * Polynomial{-1.0, 1.0};
  CHECK(prod.coeffs() == std::vector<double>{-1.0, 0.0, 1.0});
  CHECK_THROWS_AS(Polynomial({1.0, std::nan("")}), Error);
}

TEST_CASE("transfer function validation", "[passivity]") {
  CHECK(code_of([] { RationalTF(Polynomial{1.0}, Polynomial{}); }) == ErrorCode::ZeroPolynomial);
  CHECK(code_of([] { RationalTF(Polynomial{0.0, 0.0, 1.0}, Polynomial{1.0, 1.0}); }) ==
        ErrorCode::ImproperTransferFunction);
  RationalTF biproper(Polynomial{2.0, 3.0}, Polynomial{1.0, 1.0});
  CHECK_FALSE(biproper.strictly_proper());
  CHECK(biproper.high_frequency_gain() == 3.0);
}

TEST_CASE("frequency response", "[passivity]") {
  const Complex v = eval_freq({Polynomial{1.0}, Polynomial{0.0, 1.0}}, 1.0);
  CHECK(v.real() == Approx(0.0).margin(1e-15));
  CHECK(v.imag() == Approx(-1.0));
  const RationalTF osc(Polynomial{1.0}, Polynomial{1.0, 0.0, 1.0});
  CHECK(eval_freq(osc, 0.0) == Complex(1.0, 0.0));
  CHECK(code_of([&] { eval_freq(osc, 1.0); }) == ErrorCode::PoleOnAxis);
}

TEST_CASE("routh hurwitz examples", "[passivity]") {
  CHECK(routh_hurwitz(Polynomial{1.0, 2.0, 1.0}));
  CHECK_FALSE(routh_hurwitz(Polynomial{2.0, 1.0, 1.0, 1.0}));
  CHECK(routh_hurwitz(Polynomial{0.4 * 2, 1.0, 1.0, 1.0}));
  CHECK_FALSE(routh_hurwitz(Polynomial{0.0, 1.0, 1.0}));   // root at 0
  CHECK_FALSE(routh_hurwitz(Polynomial{1.0, 0.0, 1.0}));   // roots at +-i
  CHECK(routh_hurwitz(Polynomial{-1.0, -1.0}));            // -(1 + s), root at -1
  CHECK(routh_hurwitz(Polynomial{-1.0, -1.0, -1.0}) == routh_hurwitz(Polynomial{1.0, 1.0, 1.0}));
  CHECK(code_of([] { routh_hurwitz(Polynomial{}); }) == ErrorCode::ZeroPolynomial);
  CHECK(code_of([] { routh_hurwitz(Polynomial{3.0}); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("routh hurwitz agrees with root finding", "[passivity][property]") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> degree(1, 6);
  std::uniform_real_distribution<double> coeff(-1.0, 3.0);
  int checked = 0, hurwitz = 0;
  while (checked < 500) {
    const int d = degree(rng);
    std::vector<double> c(static_cast<std::size_t>(d + 1));
    for (auto& x : c) x = coeff(rng);
    c.back() = std::abs(c.back()) + 0.1;
    const double m = max_real_root(c);
    if (std::abs(m) < 1e-7) continue;
    const bool expected = m < 0.0;
    REQUIRE(routh_hurwitz(Polynomial(c)) == expected);
    hurwitz += expected;
    ++checked;
  }
  CHECK(hurwitz > 20);
}

TEST_CASE("ifp index examples", "[passivity]") {
  const auto integrator = ifp_index({Polynomial{1.0}, Polynomial{0.0, 1.0}});
  CHECK(integrator.alpha == 0.0);

  const auto c = ifp_index(cubic(2.0, 3.0));
  CHECK(c.alpha == Approx(0.25).epsilon(1e-9));
  CHECK(c.method == IfpMethod::grid_refined);
  // Minimizer of p^2 w^2 + (q - w^2)^2 is w^2 = q - p^2/2.
  CHECK(c.omega_star == Approx(1.0).epsilon(1e-6));

  const auto v = ifp_index({Polynomial{1.0}, Polynomial{0.0, 2.0, 1.0, 0.1}});
  CHECK(v.alpha == Approx(0.25).epsilon(1e-9));
  CHECK(v.omega_star < 1e-3);
}

TEST_CASE("ifp index endpoints and feedthrough", "[passivity]") {
  // (s - 1)/(s + 1): Re W(i w) = (w^2 - 1)/(w^2 + 1), infimum -1 at w = 0.
  const auto lag = ifp_index({Polynomial{-1.0, 1.0}, Polynomial{1.0, 1.0}});
  CHECK(lag.alpha == Approx(1.0).epsilon(1e-12));
  CHECK(lag.omega_star == 0.0);

  // (1 - s)/(s + 1) mirrors it: infimum -1 as w -> infinity.
  const auto lead = ifp_index({Polynomial{1.0, -1.0}, Polynomial{1.0, 1.0}});
  CHECK(lead.alpha == Approx(1.0).epsilon(1e-12));
  CHECK(std::isinf(lead.omega_star));

  // (s + 2)/(s + 1) is strictly input passive: alpha clamps to 0.
  const auto sip = ifp_index({Polynomial{2.0, 1.0}, Polynomial{1.0, 1.0}});
  CHECK(sip.alpha == 0.0);
  CHECK(sip.raw_infimum == Approx(1.0).epsilon(1e-9));

  const auto constant = ifp_index({Polynomial{-2.0}, Polynomial{1.0}});
  CHECK(constant.method == IfpMethod::closed_form);
  CHECK(constant.alpha == 2.0);

  // Integrator with a stable lag: 1/(s (s + 1)), Re = -1/(1 + w^2), alpha = 1 at w -> 0.
  const auto lagged = ifp_index({Polynomial{1.0}, Polynomial{0.0, 1.0, 1.0}});
  CHECK(lagged.alpha == Approx(1.0).epsilon(1e-9));
}

TEST_CASE("ifp index refuses non-certifiable systems", "[passivity]") {
  auto refuses = [](Polynomial num, Polynomial den) {
    return code_of([&] { ifp_index({num, den}); }) == ErrorCode::NotCertifiable;
  };
  CHECK(refuses(Polynomial{1.0}, Polynomial{-1.0, 1.0}));            // pole at +1
  CHECK(refuses(Polynomial{1.0}, Polynomial{0.0, 0.0, 1.0}));        // double pole at 0
  CHECK(refuses(Polynomial{-1.0}, Polynomial{0.0, 1.0}));            // residue -1 at 0
  CHECK(refuses(Polynomial{1.0}, Polynomial{1.0, 0.0, 1.0}));        // residue -i/2 at i
  CHECK_NOTHROW(ifp_index({Polynomial{0.0, 1.0}, Polynomial{1.0, 0.0, 1.0}}));  // residue 1/2
}

TEST_CASE("cubic family matches the closed form", "[passivity][oracle]") {
  const double values[] = {0.5, 1.0, 2.0, 4.0};
  for (double p : values) {
    for (double q : values) {
      const double expected = cubic_alpha(p, q);
      const double got = ifp_index(cubic(p, q)).alpha;
      INFO("p = " << p << ", q = " << q);
      CHECK(std::abs(got - expected) <= 1e-6 * expected);
      // The grid oracle only bounds the infimum from above.
      const double grid = cubic_grid_alpha(p, q);
      CHECK(grid <= expected * (1.0 + 1e-12));
      CHECK(std::abs(grid - expected) <= 1e-6 * expected);
    }
  }
}

TEST_CASE("ifp index scales linearly", "[passivity][property]") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> par(0.3, 4.0), scale(0.1, 10.0);
  for (int k = 0; k < 30; ++k) {
    const double p = par(rng), q = par(rng), c = scale(rng);
    const double base = ifp_index(cubic(p, q)).alpha;
    const double scaled = ifp_index({Polynomial{c}, Polynomial{0.0, q, p, 1.0}}).alpha;
    CHECK(scaled == Approx(c * base).epsilon(1e-8));
  }
}

TEST_CASE("positive-real conditions", "[passivity]") {
  auto r = prl_conditions({Polynomial{1.0}, Polynomial{0.0, 1.0}}, 0.0);
  CHECK(r.all());
  r = prl_conditions({Polynomial{1.0}, Polynomial{-1.0, 1.0}}, 5.0);
  CHECK_FALSE(r.no_unstable_poles);
  r = prl_conditions({Polynomial{0.0, 1.0}, Polynomial{1.0, 1.0, 1.0}}, 0.0);
  CHECK(r.all());
  r = prl_conditions(cubic(1.0, 1.0), 1.0);
  CHECK_FALSE(r.freq_condition_ok);
  CHECK(r.no_unstable_poles);
}

TEST_CASE("certified index satisfies the frequency condition", "[passivity][property]") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> coeff(0.2, 3.0), sign(-1.0, 1.0);
  int certified = 0;
  for (int k = 0; k < 60; ++k) {
    // Stable cubic times an optional integrator, numerator of degree <= 2.
    std::vector<double> den{coeff(rng), coeff(rng), coeff(rng), 1.0};
    if (!routh_hurwitz(Polynomial(den))) continue;
    Polynomial d(den);
    if (k % 2 == 0) d = Polynomial{0.0, 1.0} * d;
    const RationalTF w(Polynomial{coeff(rng), sign(rng), sign(rng)}, d);
    IfpCertificate c;
    try {
      c = ifp_index(w);
    } catch (const Error&) {
      continue;
    }
    ++certified;
    const auto report = prl_conditions(w, c.alpha);
    CHECK(report.all());
  }
  CHECK(certified > 20);
}

TEST_CASE("ifp shift formulas", "[passivity]") {
  auto s = ifp_shift(0.25, 1.0);
  CHECK(s.alpha_hat == Approx(0.5));
  CHECK(s.gamma == Approx(1.5));
  s = ifp_shift(0.0, 0.3);
  CHECK(s.alpha_hat == 0.0);
  CHECK(s.gamma == Approx(0.3));
  CHECK(code_of([] { ifp_shift(0.25, 2.0); }) == ErrorCode::BOutOfRange);
  CHECK(code_of([] { ifp_shift(0.25, 0.0); }) == ErrorCode::BOutOfRange);
}

TEST_CASE("ifp shift identity", "[passivity]") {
  const double y1[] = {1.0, 0.0}, u1[] = {0.0, 1.0};
  CHECK(ifp_shift_identity_check(0.25, 1.0, y1, u1) < 1e-12);
  const double y2[] = {2.0}, u2[] = {-1.0};
  CHECK(ifp_shift_identity_check(0.0, 0.5, y2, u2) < 1e-12);
  CHECK(code_of([&] { ifp_shift_identity_check(0.1, 0.5, y1, u2); }) ==
        ErrorCode::DimensionMismatch);

  std::mt19937_64 rng(17);
  std::normal_distribution<double> normal(0.0, 3.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    const double alpha = 3.0 * unit(rng);
    const double b = (0.01 + 0.98 * unit(rng)) / (2.0 * std::max(alpha, 1e-2));
    std::vector<double> y(3), u(3);
    for (int d = 0; d < 3; ++d) y[d] = normal(rng), u[d] = normal(rng);
    REQUIRE(ifp_shift_identity_check(alpha, b, y, u) < 1e-12);
  }
}
