#include <cmath>
#include <numeric>

#include "cilayer/error.hpp"
#include "cilayer/sources.hpp"
#include "doctest.h"

using namespace cilayer;

namespace {

// Composite Simpson rule, the reference for closed-form interval moments.
template <class F>
double simpson(F f, double lo, double hi, int n = 20000) {
  const double h = (hi - lo) / n;
  double s = f(lo) + f(hi);
  for (int i = 1; i < n; ++i) s += f(lo + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

}  // namespace

TEST_CASE("laplacian interval moments match quadrature") {
  const double lam = 1.3;
  const auto src = ScalarSource::laplacian(lam);
  auto pdf = [&](double x) { return 0.5 * lam * std::exp(-lam * std::abs(x)); };
  const double pairs[][2] = {{-3.0, -0.5}, {-0.7, 1.1}, {0.2, 4.0}, {-12.0, 12.0}};
  for (const auto& p : pairs) {
    const double lo = p[0], hi = p[1];
    const double mass = simpson(pdf, lo, hi);
    CHECK(src.interval_probability(lo, hi) == doctest::Approx(mass).epsilon(1e-9));
    const double c = simpson([&](double x) { return x * pdf(x); }, lo, hi) / mass;
    CHECK(src.interval_centroid(lo, hi) == doctest::Approx(c).epsilon(1e-8));
    const double mse = simpson([&](double x) { return (x - 0.3) * (x - 0.3) * pdf(x); }, lo, hi);
    CHECK(src.interval_mse(lo, hi, 0.3) == doctest::Approx(mse).epsilon(1e-8));
  }
  CHECK(src.variance() == doctest::Approx(2.0 / (lam * lam)));
  CHECK(src.interval_probability(-kInf, kInf) == doctest::Approx(1.0));
  CHECK(src.interval_probability(-kInf, 0.0) == doctest::Approx(0.5));
}

TEST_CASE("laplacian quantile inverts the cdf") {
  const auto src = ScalarSource::laplacian(0.8);
  for (double u : {0.01, 0.2, 0.5, 0.77, 0.999}) {
    const double t = src.quantile(u);
    CHECK(src.interval_probability(-kInf, t) == doctest::Approx(u).epsilon(1e-12));
  }
}

TEST_CASE("uniform source") {
  const auto src = ScalarSource::uniform(0.0, 6.0);
  CHECK(src.interval_probability(1.0, 2.5) == doctest::Approx(0.25));
  CHECK(src.interval_centroid(1.0, 2.5) == doctest::Approx(1.75));
  // Cell of width w about its centroid: w^2 / 12 times its mass.
  CHECK(src.interval_mse(0.0, 3.0, 1.5) == doctest::Approx(0.5 * 9.0 / 12.0));
  CHECK(src.variance() == doctest::Approx(3.0));
  CHECK(src.interval_probability(-kInf, -1.0) == 0.0);
}

TEST_CASE("discrete and empirical sources") {
  const auto d = ScalarSource::discrete({0.0, 1.0, 3.0}, {0.25, 0.25, 0.5});
  CHECK(d.mean() == doctest::Approx(1.75));
  CHECK(d.interval_probability(0.5, 2.0) == doctest::Approx(0.25));
  CHECK(d.interval_centroid(-1.0, 10.0) == doctest::Approx(1.75));
  const auto e = ScalarSource::empirical({3.0, 0.0, 1.0, 3.0});
  CHECK(e.mean() == doctest::Approx(1.75));
  CHECK(e.interval_probability(2.0, 4.0) == doctest::Approx(0.5));
  CHECK_THROWS_AS(ScalarSource::discrete({0.0, 1.0}, {0.5, 0.4}), Error);
  CHECK_THROWS_AS(ScalarSource::laplacian(-1.0), Error);
}

TEST_CASE("gaussian draws reproduce mean and covariance") {
  const auto g = VectorSource::gaussian({0.0, 1.0}, {1.0, 1.0, 1.0, 2.0});
  const auto s = draw_training_set(g, 200000, 7);
  REQUIRE(s.size() == 200000);
  const auto m = s.mean();
  CHECK(std::abs(m[0]) < 0.01);
  CHECK(std::abs(m[1] - 1.0) < 0.01);
  double c00 = 0, c01 = 0, c11 = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto x = s.point(i);
    c00 += (x[0] - m[0]) * (x[0] - m[0]);
    c01 += (x[0] - m[0]) * (x[1] - m[1]);
    c11 += (x[1] - m[1]) * (x[1] - m[1]);
  }
  const double n = static_cast<double>(s.size());
  CHECK(std::abs(c00 / n - 1.0) < 0.02);
  CHECK(std::abs(c01 / n - 1.0) < 0.02);
  CHECK(std::abs(c11 / n - 2.0) < 0.03);
}

TEST_CASE("training draws are deterministic per seed") {
  const auto g = VectorSource::gaussian({0.0, 0.0}, {1.0, 0.0, 0.0, 1.0});
  const auto a = draw_training_set(g, 100, 3), b = draw_training_set(g, 100, 3);
  const auto c = draw_training_set(g, 100, 4);
  CHECK(std::equal(a.data().begin(), a.data().end(), b.data().begin()));
  CHECK_FALSE(std::equal(a.data().begin(), a.data().end(), c.data().begin()));
}

TEST_CASE("cholesky of a semi-definite matrix") {
  const std::vector<double> sigma{4.0, 2.0, 2.0, 1.0};  // rank one
  const auto l = cholesky_psd(sigma, 2);
  CHECK(l[0] == doctest::Approx(2.0));
  CHECK(l[2] == doctest::Approx(1.0));
  CHECK(l[3] == doctest::Approx(0.0));
  CHECK_THROWS_AS(cholesky_psd(std::vector<double>{1.0, 2.0, 2.0, 1.0}, 2), Error);
}
