#include "cilayer/sources.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "cilayer/error.hpp"

namespace cilayer {

namespace {

// G_k(y) = integral_0^y u^k e^{-u} du for k = 0, 1, 2.
struct ExpIntegrals {
  double g0, g1, g2;
};

ExpIntegrals exp_integrals(double y) {
  if (std::isinf(y)) return {1.0, 1.0, 2.0};
  if (y < 0.5) {
    // Alternating series; terms shrink by at least y/n.
    double g0 = 0.0, g1 = 0.0, g2 = 0.0;
    double term = 1.0;  // (-1)^n y^n / n!
    for (int n = 0; n < 40; ++n) {
      g0 += term * y / (n + 1);
      g1 += term * y * y / (n + 2);
      g2 += term * y * y * y / (n + 3);
      term *= -y / (n + 1);
      if (std::abs(term) < 1e-18) break;
    }
    return {g0, g1, g2};
  }
  const double e = std::exp(-y);
  return {-std::expm1(-y), 1.0 - e * (1.0 + y), 2.0 - e * (2.0 + 2.0 * y + y * y)};
}

// Moments of (lambda/2) exp(-lambda x) over [a, b] with 0 <= a <= b, taken
// about the left endpoint a: returns mass, integral (x-a) f, integral (x-a)^2 f.
Moments half_line_about_a(double lambda, double a, double b) {
  if (!(b > a)) return {};
  const double base = 0.5 * std::exp(-lambda * a);
  const ExpIntegrals g = exp_integrals(lambda * (b - a));
  return {base * g.g0, base * g.g1 / lambda, base * g.g2 / (lambda * lambda)};
}

struct Segment {
  double a, b;
  bool mirrored;
};

// Splits [lo, hi] at zero into nonnegative segments (mirrored for the
// negative half).
int split_at_zero(double lo, double hi, Segment out[2]) {
  int n = 0;
  if (lo < 0.0) out[n++] = {std::max(0.0, -hi), -lo, true};
  if (hi > 0.0) out[n++] = {std::max(0.0, lo), hi, false};
  return n;
}

void check_interval(double lo, double hi) {
  if (std::isnan(lo) || std::isnan(hi) || lo > hi) {
    std::ostringstream os;
    os << "invalid interval [" << lo << ", " << hi << "]";
    fail(ErrorCode::InvalidInterval, os.str());
  }
}

}  // namespace

ScalarSource ScalarSource::laplacian(double lambda) {
  if (!(lambda > 0.0) || std::isinf(lambda))
    fail(ErrorCode::Model, "laplacian lambda must be positive and finite");
  ScalarSource s;
  s.kind_ = ScalarKind::Laplacian;
  s.p0_ = lambda;
  return s;
}

ScalarSource ScalarSource::uniform(double a, double b) {
  if (!(a < b) || std::isinf(a) || std::isinf(b))
    fail(ErrorCode::Model, "uniform source needs finite a < b");
  ScalarSource s;
  s.kind_ = ScalarKind::Uniform;
  s.p0_ = a;
  s.p1_ = b;
  return s;
}

ScalarSource ScalarSource::discrete(std::vector<double> values, std::vector<double> masses) {
  if (values.empty() || values.size() != masses.size())
    fail(ErrorCode::Model, "discrete source needs matching non-empty values and masses");
  double total = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) fail(ErrorCode::Model, "discrete atom must be finite");
    if (!(masses[i] >= 0.0)) fail(ErrorCode::Model, "discrete masses must be nonnegative");
    total += masses[i];
  }
  if (std::abs(total - 1.0) > 1e-12) fail(ErrorCode::Model, "discrete masses must sum to 1");

  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto i, auto j) { return values[i] < values[j]; });
  ScalarSource s;
  s.kind_ = ScalarKind::DiscreteFinite;
  for (auto i : order) {
    if (!s.values_.empty() && s.values_.back() == values[i]) {
      s.masses_.back() += masses[i];
    } else {
      s.values_.push_back(values[i]);
      s.masses_.push_back(masses[i]);
    }
  }
  s.build_prefix();
  return s;
}

ScalarSource ScalarSource::empirical(std::vector<double> samples) {
  if (samples.empty()) fail(ErrorCode::Model, "empirical source needs at least one sample");
  for (double v : samples)
    if (!std::isfinite(v)) fail(ErrorCode::Model, "empirical sample must be finite");
  std::sort(samples.begin(), samples.end());
  ScalarSource s;
  s.kind_ = ScalarKind::Empirical;
  const double w = 1.0 / static_cast<double>(samples.size());
  for (double v : samples) {
    if (!s.values_.empty() && s.values_.back() == v) {
      s.masses_.back() += w;
    } else {
      s.values_.push_back(v);
      s.masses_.push_back(w);
    }
  }
  s.build_prefix();
  return s;
}

void ScalarSource::build_prefix() {
  const std::size_t n = values_.size();
  cum_mass_.assign(n + 1, 0.0L);
  cum_first_.assign(n + 1, 0.0L);
  cum_second_.assign(n + 1, 0.0L);
  for (std::size_t i = 0; i < n; ++i) {
    const long double v = values_[i], m = masses_[i];
    cum_mass_[i + 1] = cum_mass_[i] + m;
    cum_first_[i + 1] = cum_first_[i] + m * v;
    cum_second_[i + 1] = cum_second_[i] + m * v * v;
  }
}

std::size_t ScalarSource::lower_index(double x) const {
  if (x == -kInf) return 0;
  if (x == kInf) return values_.size();
  return static_cast<std::size_t>(std::lower_bound(values_.begin(), values_.end(), x) -
                                  values_.begin());
}

Moments ScalarSource::interval_moments(double lo, double hi) const {
  check_interval(lo, hi);
  switch (kind_) {
    case ScalarKind::Laplacian: {
      Moments total;
      Segment seg[2];
      const int n = split_at_zero(lo, hi, seg);
      for (int k = 0; k < n; ++k) {
        const Moments m = half_line_about_a(p0_, seg[k].a, seg[k].b);
        const double a = seg[k].a;
        const double first = a * m.mass + m.first;
        total.mass += m.mass;
        total.first += seg[k].mirrored ? -first : first;
        total.second += a * a * m.mass + 2.0 * a * m.first + m.second;
      }
      return total;
    }
    case ScalarKind::Uniform: {
      const double l = std::clamp(lo, p0_, p1_), h = std::clamp(hi, p0_, p1_);
      const double w = p1_ - p0_;
      return {(h - l) / w, (h * h - l * l) / (2.0 * w), (h * h * h - l * l * l) / (3.0 * w)};
    }
    default: {
      const std::size_t i0 = lower_index(lo), i1 = lower_index(hi);
      if (i1 <= i0) return {};
      return {static_cast<double>(cum_mass_[i1] - cum_mass_[i0]),
              static_cast<double>(cum_first_[i1] - cum_first_[i0]),
              static_cast<double>(cum_second_[i1] - cum_second_[i0])};
    }
  }
}

double ScalarSource::interval_probability(double lo, double hi) const {
  return interval_moments(lo, hi).mass;
}

double ScalarSource::interval_centroid(double lo, double hi) const {
  check_interval(lo, hi);
  switch (kind_) {
    case ScalarKind::Laplacian: {
      Segment seg[2];
      const int n = split_at_zero(lo, hi, seg);
      double mass = 0.0, first = 0.0;
      for (int k = 0; k < n; ++k) {
        const Moments m = half_line_about_a(p0_, seg[k].a, seg[k].b);
        const double f = seg[k].a * m.mass + m.first;
        mass += m.mass;
        first += seg[k].mirrored ? -f : f;
      }
      if (!(mass > 0.0)) fail(ErrorCode::EmptyCell, "centroid of a zero-probability interval");
      if (n == 1) {
        // Single segment: centroid about its own endpoint keeps precision in the tails.
        const Moments m = half_line_about_a(p0_, seg[0].a, seg[0].b);
        const double c = seg[0].a + m.first / m.mass;
        return seg[0].mirrored ? -c : c;
      }
      return first / mass;
    }
    case ScalarKind::Uniform: {
      const double l = std::clamp(lo, p0_, p1_), h = std::clamp(hi, p0_, p1_);
      if (!(h > l)) fail(ErrorCode::EmptyCell, "centroid of a zero-probability interval");
      return 0.5 * (l + h);
    }
    default: {
      const std::size_t i0 = lower_index(lo), i1 = lower_index(hi);
      if (i1 <= i0) fail(ErrorCode::EmptyCell, "centroid of a zero-probability interval");
      if (i1 - i0 <= 64) {
        double m = 0.0, f = 0.0;
        for (std::size_t i = i0; i < i1; ++i) {
          m += masses_[i];
          f += masses_[i] * values_[i];
        }
        if (!(m > 0.0)) fail(ErrorCode::EmptyCell, "centroid of a zero-probability interval");
        return std::clamp(f / m, values_[i0], values_[i1 - 1]);
      }
      const long double m = cum_mass_[i1] - cum_mass_[i0];
      if (!(m > 0.0L)) fail(ErrorCode::EmptyCell, "centroid of a zero-probability interval");
      const double c = static_cast<double>((cum_first_[i1] - cum_first_[i0]) / m);
      return std::clamp(c, values_[i0], values_[i1 - 1]);
    }
  }
}

double ScalarSource::interval_mse(double lo, double hi, double rep) const {
  check_interval(lo, hi);
  switch (kind_) {
    case ScalarKind::Laplacian: {
      Segment seg[2];
      const int n = split_at_zero(lo, hi, seg);
      double total = 0.0;
      for (int k = 0; k < n; ++k) {
        const Moments m = half_line_about_a(p0_, seg[k].a, seg[k].b);
        if (!(m.mass > 0.0)) continue;
        const double r = seg[k].mirrored ? -rep : rep;
        const double s = seg[k].a - r;
        total += m.second + 2.0 * s * m.first + s * s * m.mass;
      }
      return std::max(total, 0.0);
    }
    case ScalarKind::Uniform: {
      const double l = std::clamp(lo, p0_, p1_), h = std::clamp(hi, p0_, p1_);
      if (!(h > l)) return 0.0;
      const double dh = h - rep, dl = l - rep;
      return (dh * dh * dh - dl * dl * dl) / (3.0 * (p1_ - p0_));
    }
    default: {
      const std::size_t i0 = lower_index(lo), i1 = lower_index(hi);
      if (i1 <= i0) return 0.0;
      if (i1 - i0 <= 64) {
        double total = 0.0;
        for (std::size_t i = i0; i < i1; ++i) {
          const double d = values_[i] - rep;
          total += masses_[i] * d * d;
        }
        return total;
      }
      const long double m = cum_mass_[i1] - cum_mass_[i0];
      const long double f = cum_first_[i1] - cum_first_[i0];
      const long double s = cum_second_[i1] - cum_second_[i0];
      const long double r = rep;
      return std::max(0.0, static_cast<double>(s - 2.0L * r * f + r * r * m));
    }
  }
}

double ScalarSource::mean() const {
  switch (kind_) {
    case ScalarKind::Laplacian:
      return 0.0;
    case ScalarKind::Uniform:
      return 0.5 * (p0_ + p1_);
    default:
      return static_cast<double>(cum_first_.back() / cum_mass_.back());
  }
}

double ScalarSource::variance() const {
  switch (kind_) {
    case ScalarKind::Laplacian:
      return 2.0 / (p0_ * p0_);
    case ScalarKind::Uniform:
      return (p1_ - p0_) * (p1_ - p0_) / 12.0;
    default: {
      const double mu = mean();
      return interval_mse(-kInf, kInf, mu);
    }
  }
}

double ScalarSource::quantile(double u) const {
  if (!(u >= 0.0 && u <= 1.0)) fail(ErrorCode::Domain, "quantile level outside [0, 1]");
  switch (kind_) {
    case ScalarKind::Laplacian:
      if (u == 0.0) return -kInf;
      if (u == 1.0) return kInf;
      return u < 0.5 ? std::log(2.0 * u) / p0_ : -std::log(2.0 * (1.0 - u)) / p0_;
    case ScalarKind::Uniform:
      return p0_ + u * (p1_ - p0_);
    default: {
      const long double target = u * cum_mass_.back();
      auto it = std::lower_bound(cum_mass_.begin() + 1, cum_mass_.end(), target - 1e-15L);
      const auto idx = std::min<std::size_t>(it - cum_mass_.begin() - 1, values_.size() - 1);
      return values_[idx];
    }
  }
}

std::string ScalarSource::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case ScalarKind::Laplacian:
      os << "laplacian(lambda=" << p0_ << ")";
      break;
    case ScalarKind::Uniform:
      os << "uniform(" << p0_ << ", " << p1_ << ")";
      break;
    case ScalarKind::DiscreteFinite:
      os << "discrete(" << values_.size() << " atoms)";
      break;
    case ScalarKind::Empirical:
      os << "empirical(" << values_.size() << " distinct samples)";
      break;
  }
  return os.str();
}

TrainingSet::TrainingSet(std::size_t dim, std::vector<double> data)
    : dim_(dim), data_(std::move(data)) {
  if (dim_ == 0) fail(ErrorCode::Model, "training set dimension must be at least 1");
  if (data_.empty() || data_.size() % dim_ != 0)
    fail(ErrorCode::Model, "training set must hold a positive whole number of points");
}

std::vector<double> TrainingSet::mean() const {
  std::vector<double> m(dim_, 0.0);
  const std::size_t n = size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < dim_; ++k) m[k] += data_[i * dim_ + k];
  for (double& v : m) v /= static_cast<double>(n);
  return m;
}

std::vector<double> cholesky_psd(std::span<const double> sigma, std::size_t dim) {
  if (sigma.size() != dim * dim) fail(ErrorCode::Model, "covariance must be a d x d matrix");
  double scale = 0.0;
  for (std::size_t i = 0; i < dim; ++i) scale = std::max(scale, std::abs(sigma[i * dim + i]));
  const double tol = 1e-12 * std::max(scale, 1.0);
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (std::abs(sigma[i * dim + j] - sigma[j * dim + i]) > tol)
        fail(ErrorCode::Model, "covariance must be symmetric");

  std::vector<double> l(dim * dim, 0.0);
  for (std::size_t j = 0; j < dim; ++j) {
    double d = sigma[j * dim + j];
    for (std::size_t k = 0; k < j; ++k) d -= l[j * dim + k] * l[j * dim + k];
    if (d < -tol) fail(ErrorCode::Model, "covariance is not positive semi-definite");
    const double pivot = d > tol ? std::sqrt(d) : 0.0;
    l[j * dim + j] = pivot;
    for (std::size_t i = j + 1; i < dim; ++i) {
      double s = sigma[i * dim + j];
      for (std::size_t k = 0; k < j; ++k) s -= l[i * dim + k] * l[j * dim + k];
      if (pivot > 0.0) {
        l[i * dim + j] = s / pivot;
      } else if (std::abs(s) > tol) {
        fail(ErrorCode::Model, "covariance is not positive semi-definite");
      }
    }
  }
  return l;
}

VectorSource VectorSource::gaussian(std::vector<double> mu, std::vector<double> sigma) {
  const std::size_t d = mu.size();
  if (d == 0) fail(ErrorCode::Model, "gaussian mean must be non-empty");
  VectorSource s;
  s.kind_ = VectorKind::Gaussian;
  s.dim_ = d;
  s.chol_ = cholesky_psd(sigma, d);
  s.mu_ = std::move(mu);
  s.sigma_ = std::move(sigma);
  return s;
}

VectorSource VectorSource::empirical(TrainingSet samples) {
  VectorSource s;
  s.kind_ = VectorKind::Empirical;
  s.dim_ = samples.dim();
  s.samples_ = std::move(samples);
  return s;
}

TrainingSet draw_training_set(const VectorSource& src, std::size_t n, std::uint64_t seed) {
  if (n == 0) fail(ErrorCode::Config, "training set size must be at least 1");
  const std::size_t d = src.dim_;
  std::mt19937_64 rng(seed);
  if (src.kind_ == VectorKind::Gaussian) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> data(n * d);
    std::vector<double> z(d);
    for (std::size_t i = 0; i < n; ++i) {
      for (auto& v : z) v = normal(rng);
      for (std::size_t r = 0; r < d; ++r) {
        double acc = src.mu_[r];
        for (std::size_t c = 0; c <= r; ++c) acc += src.chol_[r * d + c] * z[c];
        data[i * d + r] = acc;
      }
    }
    return TrainingSet(d, std::move(data));
  }
  const TrainingSet& all = src.samples_;
  if (n > all.size()) fail(ErrorCode::Config, "cannot draw more points than the empirical source holds");
  if (n == all.size()) return all;
  std::vector<std::size_t> idx(all.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(n);
  std::vector<double> data;
  data.reserve(n * d);
  for (auto i : idx) {
    auto p = all.point(i);
    data.insert(data.end(), p.begin(), p.end());
  }
  return TrainingSet(d, std::move(data));
}

}  // namespace cilayer
