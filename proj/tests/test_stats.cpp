#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "shiryaev.hpp"

using namespace seqdmg;
using testutil::gauss1;

namespace {

// KL(f||g) for 1-D normals by composite Simpson integration of f ln(f/g)
// over mean_f +- 14 sd_f.
double kl_numeric(double mf, double vf, double mg, double vg) {
  const double sd = std::sqrt(vf);
  const double lo = mf - 14.0 * sd, hi = mf + 14.0 * sd;
  const int n = 20000;
  const double h = (hi - lo) / n;
  double total = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double x = lo + k * h;
    const double lf = testutil::normal_logpdf(x, mf, vf);
    const double v = std::exp(lf) * (lf - testutil::normal_logpdf(x, mg, vg));
    total += (k == 0 || k == n ? 1.0 : (k % 2 ? 4.0 : 2.0)) * v;
  }
  return total * h / 3.0;
}

}  // namespace

TEST_CASE("log_add and log_sum_exp") {
  CHECK(log_add(std::log(2.0), std::log(3.0)) == doctest::Approx(std::log(5.0)).epsilon(1e-14));
  CHECK(log_add(kNegInf, 1.5) == 1.5);
  CHECK(log_add(-1000.0, -1000.0) == doctest::Approx(-1000.0 + std::log(2.0)));
  CHECK(log_sum_exp({}) == kNegInf);
  CHECK(log_sum_exp({kNegInf, kNegInf}) == kNegInf);
  CHECK(log_sum_exp({800.0, 800.0}) == doctest::Approx(800.0 + std::log(2.0)));
}

TEST_CASE("set helpers") {
  CHECK(format_set({1, 3}) == "{1,3}");
  CHECK(set_key({1, 3}) == "1,3");
  CHECK(parse_set_key(" 3, 1 ") == VarSet{1, 3});
  CHECK_THROWS_AS(parse_set_key("1,1"), Error);
  CHECK_THROWS_AS(parse_set_key("1,x"), Error);
  CHECK(is_subset({1, 3}, {1, 2, 3}));
  CHECK_FALSE(is_subset({1, 4}, {1, 2, 3}));
  CHECK(set_intersection({1, 2, 3}, {2, 3, 4}) == VarSet{2, 3});
  CHECK(set_difference({1, 2, 3}, {2}) == VarSet{1, 3});
}

TEST_CASE("Gaussian density against the hand-written formula") {
  const auto g = gauss1(0.7, 2.5);
  for (double x : {-3.0, 0.0, 0.7, 4.2})
    CHECK(g.log_density(testutil::vec1(x)) == doctest::Approx(testutil::normal_logpdf(x, 0.7, 2.5)).epsilon(1e-13));

  Eigen::Vector2d mean(1.0, -1.0);
  Eigen::Matrix2d cov;
  cov << 2.0, 0.6, 0.6, 1.0;
  const GaussianModel m(mean, cov);
  const Eigen::Vector2d x(0.3, 0.4);
  const Eigen::Vector2d d = x - mean;
  const double expect =
      -std::log(2.0 * M_PI) - 0.5 * std::log(cov.determinant()) - 0.5 * d.dot(cov.inverse() * d);
  CHECK(m.log_density(x) == doctest::Approx(expect).epsilon(1e-13));
  CHECK(m.log_det() == doctest::Approx(std::log(cov.determinant())));
}

TEST_CASE("Gaussian construction rejects bad covariances") {
  Eigen::Matrix2d asym;
  asym << 1.0, 0.5, 0.4, 1.0;
  CHECK_THROWS_AS(GaussianModel(Eigen::Vector2d::Zero(), asym), Error);
  Eigen::Matrix2d indefinite;
  indefinite << 1.0, 2.0, 2.0, 1.0;
  try {
    GaussianModel(Eigen::Vector2d::Zero(), indefinite);
    FAIL("expected a numeric error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Numeric);
  }
  CHECK_THROWS_AS(GaussianModel(Eigen::Vector2d::Zero(), Eigen::Matrix3d::Identity()), Error);
}

TEST_CASE("closed-form KL matches numeric integration on a 20-point grid") {
  const double means[] = {-1.5, -0.3, 0.0, 0.8, 2.0};
  const double vars[] = {0.25, 0.8, 1.0, 3.0};
  double worst = 0.0;
  int points = 0;
  for (double m : means)
    for (double v : vars) {
      const double closed = kl_divergence(gauss1(m, v), gauss1(0.2, 1.3));
      worst = std::max(worst, std::abs(closed - kl_numeric(m, v, 0.2, 1.3)));
      ++points;
    }
  CHECK(points == 20);
  CHECK(worst <= 1e-6);
}

TEST_CASE("KL of a density with itself is zero and KL is asymmetric") {
  Eigen::Vector3d mean(1.0, 2.0, -0.5);
  Eigen::Matrix3d a = Eigen::Matrix3d::Random();
  const Eigen::Matrix3d cov = a * a.transpose() + Eigen::Matrix3d::Identity();
  const GaussianModel f(mean, cov);
  CHECK(std::abs(kl_divergence(f, f)) <= 1e-12);
  const auto p = gauss1(0.0, 1.0), q = gauss1(1.0, 4.0);
  CHECK(kl_divergence(p, q) != doctest::Approx(kl_divergence(q, p)));
  // Equal-variance mean shift: mu^2 / 2.
  CHECK(kl_divergence(gauss1(3.0, 1.0), gauss1(0.0, 1.0)) == doctest::Approx(4.5));
}

TEST_CASE("fit_gaussian recovers moments and regularizes") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n01;
  Eigen::Matrix2d L;
  L << 1.0, 0.0, 0.5, 0.8;
  const Eigen::Vector2d mu(2.0, -1.0);
  std::vector<Eigen::VectorXd> xs;
  for (int k = 0; k < 20000; ++k) xs.push_back(mu + L * Eigen::Vector2d(n01(rng), n01(rng)));
  const auto g = fit_gaussian(xs);
  CHECK((g.mean() - mu).norm() < 0.03);
  CHECK((g.cov() - L * L.transpose()).norm() < 0.05);

  std::vector<Eigen::VectorXd> constant(5, Eigen::VectorXd::Constant(1, 3.0));
  const auto c = fit_gaussian(constant);
  CHECK(c.cov()(0, 0) > 0.0);
  CHECK_THROWS_AS(fit_gaussian({Eigen::VectorXd::Zero(2), Eigen::VectorXd::Ones(2)}), Error);
}

TEST_CASE("geometric prior masses sum to one for any horizon") {
  for (double rho : {0.001, 0.05, 0.5}) {
    const GeometricPrior p(rho);
    for (long horizon : {0L, 1L, 7L, 200L}) {
      double total = 0.0;
      for (long n = 1; n <= horizon + 1; ++n) total += prior_mass(p, n, horizon);
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(prior_mass(p, 3, 10) == doctest::Approx(rho * (1 - rho) * (1 - rho)));
    CHECK(std::exp(log_prior_mass(p, 11, 10)) == doctest::Approx(std::pow(1 - rho, 10)));
  }
  CHECK_THROWS_AS(GeometricPrior(0.0), Error);
  CHECK_THROWS_AS(GeometricPrior(1.0), Error);
}

TEST_CASE("registry lookups and missing entries") {
  DistributionRegistry r;
  SensorDensities d;
  d.pre = gauss1(0.0, 1.0);
  d.post[{1}] = gauss1(1.0, 1.0);
  d.post[{1, 2}] = gauss1(2.0, 1.0);
  r.set_sensor(2, d);
  CHECK(r.model_for(2, {}).mean()(0) == 0.0);
  CHECK(r.model_for(2, {1, 2}).mean()(0) == 2.0);
  CHECK(r.missing_subsets(2, {1, 2}) == std::vector<VarSet>{{2}});
  try {
    r.model_for(2, {2});
    FAIL("expected a model error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Model);
    CHECK(std::string(e.what()).find("sensor 2, subset {2}") != std::string::npos);
  }
  CHECK(nonempty_subsets({1, 2, 3}) == std::vector<VarSet>{{1}, {2}, {3}, {1, 2}, {1, 3}, {2, 3}, {1, 2, 3}});
}
