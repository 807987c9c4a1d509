#ifndef MCSBD_FIELD_HPP_
#define MCSBD_FIELD_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mcsbd/error.hpp"

namespace mcsbd {

template <std::size_t Rank>
using Shape = std::array<std::size_t, Rank>;

template <std::size_t Rank>
constexpr std::size_t element_count(const Shape<Rank>& shape) {
  std::size_t count = 1;
  for (auto extent : shape) count *= extent;
  return count;
}

template <std::size_t Rank>
std::string shape_string(const Shape<Rank>& shape) {
  std::string out;
  for (std::size_t d = 0; d < Rank; ++d) {
    if (d) out += "x";
    out += std::to_string(shape[d]);
  }
  return out;
}

/*
 * Real-valued signal on the discrete torus Z_{n1} x ... x Z_{nR}, stored
 * row-major. Rank 1 holds kernels, sparse signals, observations and sphere
 * iterates; rank 2 holds their image counterparts. Every solver in the
 * library is written once against this type and instantiated for both ranks.
 *
 * Invariants: every extent is >= 1, entries are finite and the shape never
 * changes after construction.
 */
template <std::size_t Rank>
class Field {
  static_assert(Rank == 1 || Rank == 2, "only 1D and 2D signals are supported");

 public:
  using value_type = double;
  using ShapeType = Shape<Rank>;

  Field() = default;

  explicit Field(const ShapeType& shape) : shape_(shape), data_(checked_count(shape), 0.0) {}

  Field(const ShapeType& shape, std::vector<double> data) : shape_(shape), data_(std::move(data)) {
    if (data_.size() != checked_count(shape)) {
      throw DimensionError("field data has " + std::to_string(data_.size()) +
                           " entries, shape " + shape_string(shape) + " needs " +
                           std::to_string(element_count(shape)));
    }
    for (double v : data_) {
      if (!std::isfinite(v)) throw DegenerateInputError("field entries must be finite");
    }
  }

  Field(std::initializer_list<double> values)
    requires(Rank == 1)
      : Field(ShapeType{values.size()}, std::vector<double>(values)) {}

  explicit Field(std::vector<double> values)
    requires(Rank == 1)
      : Field(of_vector(std::move(values))) {}

  static Field zeros(const ShapeType& shape) { return Field(shape); }

  /// Unit impulse at the origin.
  static Field delta(const ShapeType& shape) {
    Field out(shape);
    out.data_[0] = 1.0;
    return out;
  }

  /// Unit impulse at flat index `at`.
  static Field basis(const ShapeType& shape, std::size_t at) {
    Field out(shape);
    out.data_.at(at) = 1.0;
    return out;
  }

  const ShapeType& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t extent(std::size_t dim) const { return shape_.at(dim); }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  const std::vector<double>& vector() const noexcept { return data_; }

  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  double& operator()(std::size_t i, std::size_t j) noexcept
    requires(Rank == 2)
  {
    return data_[i * shape_[1] + j];
  }
  double operator()(std::size_t i, std::size_t j) const noexcept
    requires(Rank == 2)
  {
    return data_[i * shape_[1] + j];
  }

  auto begin() noexcept { return data_.begin(); }
  auto end() noexcept { return data_.end(); }
  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.end(); }

  Field& operator+=(const Field& other) {
    require_same_shape(*this, other, "operator+=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
  }
  Field& operator-=(const Field& other) {
    require_same_shape(*this, other, "operator-=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
    return *this;
  }
  Field& operator*=(double s) noexcept {
    for (double& v : data_) v *= s;
    return *this;
  }
  Field& operator/=(double s) noexcept {
    for (double& v : data_) v /= s;
    return *this;
  }

  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator-(Field a) { return a *= -1.0; }
  friend Field operator*(Field a, double s) { return a *= s; }
  friend Field operator*(double s, Field a) { return a *= s; }
  friend Field operator/(Field a, double s) { return a /= s; }

  friend bool operator==(const Field& a, const Field& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

  static void require_same_shape(const Field& a, const Field& b, const char* what) {
    if (a.shape_ != b.shape_) {
      throw DimensionError(std::string(what) + ": shape mismatch " + shape_string(a.shape_) +
                           " vs " + shape_string(b.shape_));
    }
  }

 private:
  static Field of_vector(std::vector<double>&& values) {
    const ShapeType shape{values.size()};
    return Field(shape, std::move(values));
  }

  static std::size_t checked_count(const ShapeType& shape) {
    for (auto extent : shape) {
      if (extent == 0) throw DimensionError("field extents must be >= 1");
    }
    return element_count(shape);
  }

  ShapeType shape_{};
  std::vector<double> data_;
};

using SignalVec = Field<1>;
using SignalGrid = Field<2>;

template <std::size_t Rank>
double dot(const Field<Rank>& a, const Field<Rank>& b) {
  Field<Rank>::require_same_shape(a, b, "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

/// Euclidean (Frobenius for grids) norm, scaled to avoid overflow.
template <std::size_t Rank>
double norm(const Field<Rank>& a) {
  double scale = 0.0;
  for (double v : a) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) return 0.0;
  double acc = 0.0;
  for (double v : a) {
    const double t = v / scale;
    acc += t * t;
  }
  return scale * std::sqrt(acc);
}

template <std::size_t Rank>
double norm_inf(const Field<Rank>& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

template <std::size_t Rank>
double norm_l1(const Field<Rank>& a) {
  double acc = 0.0;
  for (double v : a) acc += std::abs(v);
  return acc;
}

/// Index of the entry with the largest magnitude (first one on ties).
template <std::size_t Rank>
std::size_t argmax_abs(const Field<Rank>& a) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < a.size(); ++i) {
    if (std::abs(a[i]) > std::abs(a[best])) best = i;
  }
  return best;
}

template <std::size_t Rank>
Field<Rank> normalized(const Field<Rank>& a) {
  const double nrm = norm(a);
  if (!(nrm > 0.0)) throw DegenerateInputError("cannot normalize a zero vector");
  return a / nrm;
}

/// Flat index -> multi-index, row-major.
template <std::size_t Rank>
std::array<std::size_t, Rank> unravel(std::size_t flat, const Shape<Rank>& shape) {
  std::array<std::size_t, Rank> idx{};
  for (std::size_t d = Rank; d-- > 0;) {
    idx[d] = flat % shape[d];
    flat /= shape[d];
  }
  return idx;
}

template <std::size_t Rank>
std::size_t ravel(const std::array<std::size_t, Rank>& idx, const Shape<Rank>& shape) {
  std::size_t flat = 0;
  for (std::size_t d = 0; d < Rank; ++d) flat = flat * shape[d] + idx[d];
  return flat;
}

}  // namespace mcsbd

#endif  // MCSBD_FIELD_HPP_
