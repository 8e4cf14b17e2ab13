#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace cilayer {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Zeroth, first and second partial moments of a density over an interval.
struct Moments {
  double mass = 0.0;
  double first = 0.0;
  double second = 0.0;
};

enum class ScalarKind { Laplacian, Uniform, DiscreteFinite, Empirical };

// Scalar probability model. Immutable after construction.
//
// Intervals are half-open [lo, hi) for atomic sources (discrete and
// empirical); for densities the distinction does not matter. Infinite
// endpoints are allowed everywhere.
class ScalarSource {
 public:
  static ScalarSource laplacian(double lambda);
  static ScalarSource uniform(double a, double b);
  static ScalarSource discrete(std::vector<double> values, std::vector<double> masses);
  static ScalarSource empirical(std::vector<double> samples);

  ScalarKind kind() const noexcept { return kind_; }
  double lambda() const noexcept { return p0_; }
  double lower() const noexcept { return kind_ == ScalarKind::Uniform ? p0_ : -kInf; }
  double upper() const noexcept { return kind_ == ScalarKind::Uniform ? p1_ : kInf; }

  // Support endpoints used as the outer boundaries of every quantizer.
  double support_lo() const noexcept { return lower(); }
  double support_hi() const noexcept { return upper(); }

  double interval_probability(double lo, double hi) const;
  double interval_centroid(double lo, double hi) const;
  double interval_mse(double lo, double hi, double rep) const;
  Moments interval_moments(double lo, double hi) const;

  double mean() const;
  double variance() const;

  // Inverse CDF; for atomic sources returns the smallest atom whose
  // cumulative mass reaches u.
  double quantile(double u) const;

  // Atoms in ascending order with their masses (atomic sources only).
  std::span<const double> atoms() const noexcept { return values_; }
  std::span<const double> atom_masses() const noexcept { return masses_; }
  bool is_atomic() const noexcept {
    return kind_ == ScalarKind::DiscreteFinite || kind_ == ScalarKind::Empirical;
  }

  std::string describe() const;

 private:
  ScalarSource() = default;
  void build_prefix();
  std::size_t lower_index(double x) const;  // first atom >= x

  ScalarKind kind_ = ScalarKind::Laplacian;
  double p0_ = 1.0;
  double p1_ = 0.0;
  std::vector<double> values_;
  std::vector<double> masses_;
  std::vector<long double> cum_mass_;
  std::vector<long double> cum_first_;
  std::vector<long double> cum_second_;
};

// Training samples: n points of dimension d in row-major order, each with
// weight 1/n.
class TrainingSet {
 public:
  TrainingSet(std::size_t dim, std::vector<double> data);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return data_.size() / dim_; }
  std::span<const double> point(std::size_t i) const {
    return {data_.data() + i * dim_, dim_};
  }
  std::span<const double> data() const noexcept { return data_; }

  std::vector<double> mean() const;

 private:
  std::size_t dim_;
  std::vector<double> data_;
};

enum class VectorKind { Gaussian, Empirical };

class VectorSource {
 public:
  // sigma is a dense row-major d x d matrix.
  static VectorSource gaussian(std::vector<double> mu, std::vector<double> sigma);
  static VectorSource empirical(TrainingSet samples);

  VectorKind kind() const noexcept { return kind_; }
  std::size_t dim() const noexcept { return dim_; }
  std::span<const double> mu() const noexcept { return mu_; }
  std::span<const double> sigma() const noexcept { return sigma_; }
  const TrainingSet* samples() const noexcept {
    return kind_ == VectorKind::Empirical ? &samples_ : nullptr;
  }

  friend TrainingSet draw_training_set(const VectorSource& src, std::size_t n,
                                       std::uint64_t seed);

 private:
  VectorSource() : samples_(1, {0.0}) {}

  VectorKind kind_ = VectorKind::Gaussian;
  std::size_t dim_ = 0;
  std::vector<double> mu_;
  std::vector<double> sigma_;
  std::vector<double> chol_;  // lower-triangular factor, row-major
  TrainingSet samples_;
};

// Deterministic for fixed seed. Gaussian draws are mu + L z with L the
// Cholesky factor of sigma. For empirical sources n must not exceed the
// sample count; n equal to it returns the samples unchanged, smaller n
// returns a seeded subsample without replacement.
TrainingSet draw_training_set(const VectorSource& src, std::size_t n, std::uint64_t seed);

// Lower-triangular L with sigma = L L^T; accepts semi-definite input
// (zero pivots) and throws ErrorCode::Model otherwise.
std::vector<double> cholesky_psd(std::span<const double> sigma, std::size_t dim);

}  // namespace cilayer
