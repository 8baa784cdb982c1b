// Finite-sum objectives f(w) = (1/n) sum_i f(w; i) with exact per-sample
// values and gradients.
#ifndef HZO_OBJECTIVES_HPP
#define HZO_OBJECTIVES_HPP

#include "hzo/core.hpp"
#include "hzo/rng.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace hzo {

template <typename Scalar>
class FiniteSumObjective {
 public:
  using Vector = VectorX<Scalar>;
  using VectorRef = Eigen::Ref<const Vector>;

  FiniteSumObjective(BlockLayout layout, Index n) : layout_(layout), n_(n) {
    if (n < 1) {
      throw ConfigError("objective needs at least one sample");
    }
  }
  virtual ~FiniteSumObjective() = default;

  const BlockLayout& layout() const { return layout_; }
  Index dim() const { return layout_.dim(); }
  Index num_samples() const { return n_; }

  virtual std::string_view kind() const = 0;

  /// Infimum of the full objective when it is known in closed form.
  virtual std::optional<Scalar> known_minimum() const { return std::nullopt; }

  Scalar value(VectorRef w, Index i) const {
    check(w, i);
    return sample_value(w, i);
  }

  Vector gradient(VectorRef w, Index i) const {
    check(w, i);
    return sample_gradient(w, i);
  }

  Scalar full_value(VectorRef w) const {
    check_dim(w);
    Scalar sum(0);
    for (Index i = 0; i < n_; ++i) {
      sum += sample_value(w, i);
    }
    return sum / static_cast<Scalar>(n_);
  }

  Vector full_gradient(VectorRef w) const {
    check_dim(w);
    Vector sum = Vector::Zero(dim());
    for (Index i = 0; i < n_; ++i) {
      sum += sample_gradient(w, i);
    }
    return sum / static_cast<Scalar>(n_);
  }

 protected:
  virtual Scalar sample_value(VectorRef w, Index i) const = 0;
  virtual Vector sample_gradient(VectorRef w, Index i) const = 0;

 private:
  void check_dim(VectorRef w) const {
    if (w.size() != dim()) {
      throw DimensionError(std::string(kind()) + ": point has dimension " +
                           std::to_string(w.size()) + ", objective expects " +
                           std::to_string(dim()));
    }
  }
  void check(VectorRef w, Index i) const {
    check_dim(w);
    if (i < 0 || i >= n_) {
      throw IndexError(std::string(kind()) + ": sample index " + std::to_string(i) +
                       " out of range [0, " + std::to_string(n_) + ")");
    }
  }

  BlockLayout layout_;
  Index n_;
};

namespace detail {

template <typename Scalar>
void require_layout(const FiniteSumObjective<Scalar>& obj, const HybridPoint<Scalar>& w) {
  if (!(obj.layout() == w.layout())) {
    throw DimensionError("point layout (" + std::to_string(w.layout().d_x()) + "+" +
                         std::to_string(w.layout().d_y()) + ") does not match objective layout (" +
                         std::to_string(obj.layout().d_x()) + "+" +
                         std::to_string(obj.layout().d_y()) + ")");
  }
}

template <typename Scalar>
void require_columns(const MatrixX<Scalar>& data, Index rows, Index cols, const char* what) {
  if (data.rows() != rows || data.cols() != cols) {
    throw DimensionError(std::string(what) + ": expected " + std::to_string(rows) + "x" +
                         std::to_string(cols) + ", got " + std::to_string(data.rows()) + "x" +
                         std::to_string(data.cols()));
  }
  if (!data.allFinite()) {
    throw NumericError(std::string(what) + ": non-finite entry");
  }
}

}  // namespace detail

template <typename Scalar>
Scalar eval_sample(const FiniteSumObjective<Scalar>& obj, const HybridPoint<Scalar>& w, Index i) {
  detail::require_layout(obj, w);
  return obj.value(w.values(), i);
}

template <typename Scalar>
VectorX<Scalar> grad_sample(const FiniteSumObjective<Scalar>& obj, const HybridPoint<Scalar>& w,
                            Index i) {
  detail::require_layout(obj, w);
  return obj.gradient(w.values(), i);
}

template <typename Scalar>
Scalar eval_full(const FiniteSumObjective<Scalar>& obj, const HybridPoint<Scalar>& w) {
  detail::require_layout(obj, w);
  return obj.full_value(w.values());
}

template <typename Scalar>
VectorX<Scalar> grad_full(const FiniteSumObjective<Scalar>& obj, const HybridPoint<Scalar>& w) {
  detail::require_layout(obj, w);
  return obj.full_gradient(w.values());
}

/// (1/n) sum_i ||grad f(w; i) - grad f(w)||^2, the quantity bounded by sigma^2.
template <typename Scalar>
Scalar sample_variance(const FiniteSumObjective<Scalar>& obj, const HybridPoint<Scalar>& w) {
  detail::require_layout(obj, w);
  const VectorX<Scalar> mean = obj.full_gradient(w.values());
  Scalar sum(0);
  for (Index i = 0; i < obj.num_samples(); ++i) {
    sum += (obj.gradient(w.values(), i) - mean).squaredNorm();
  }
  return sum / static_cast<Scalar>(obj.num_samples());
}

/// f(w; i) = 1/2 (w - c_i)^T A (w - c_i) with A = diag(a_x I, a_y I).
/// Centers are stored one sample per column.
template <typename Scalar>
class BlockQuadratic final : public FiniteSumObjective<Scalar> {
 public:
  using Base = FiniteSumObjective<Scalar>;
  using typename Base::Vector;
  using typename Base::VectorRef;

  BlockQuadratic(BlockLayout layout, MatrixX<Scalar> centers, Scalar a_x, Scalar a_y)
      : Base(layout, centers.cols()), centers_(std::move(centers)), a_x_(a_x), a_y_(a_y) {
    detail::require_columns(centers_, layout.dim(), this->num_samples(), "BlockQuadratic centers");
    if (!(a_x > 0) || !(a_y > 0) || !std::isfinite(a_x) || !std::isfinite(a_y)) {
      throw ConfigError("BlockQuadratic: curvatures must be positive and finite");
    }
    curvature_ = Vector(layout.dim());
    curvature_.head(layout.d_x()).setConstant(a_x);
    curvature_.tail(layout.d_y()).setConstant(a_y);
  }

  std::string_view kind() const override { return "block_quadratic"; }
  Scalar a_x() const { return a_x_; }
  Scalar a_y() const { return a_y_; }
  const MatrixX<Scalar>& centers() const { return centers_; }
  const Vector& curvature() const { return curvature_; }

  /// Mean of the centers.
  Vector minimizer() const { return centers_.rowwise().mean(); }

  std::optional<Scalar> known_minimum() const override { return this->full_value(minimizer()); }

 protected:
  Scalar sample_value(VectorRef w, Index i) const override {
    const Vector r = w - centers_.col(i);
    return Scalar(0.5) * (curvature_.array() * r.array().square()).sum();
  }
  Vector sample_gradient(VectorRef w, Index i) const override {
    return curvature_.cwiseProduct(w - centers_.col(i));
  }

 private:
  MatrixX<Scalar> centers_;
  Scalar a_x_;
  Scalar a_y_;
  Vector curvature_;
};

/// f(w; i) = 1/2 (w - c_i)^T H (w - c_i) for a symmetric H shared by all samples.
template <typename Scalar>
class DenseQuadratic final : public FiniteSumObjective<Scalar> {
 public:
  using Base = FiniteSumObjective<Scalar>;
  using typename Base::Vector;
  using typename Base::VectorRef;

  DenseQuadratic(BlockLayout layout, MatrixX<Scalar> hessian, MatrixX<Scalar> centers)
      : Base(layout, centers.cols()), hessian_(std::move(hessian)), centers_(std::move(centers)) {
    detail::require_columns(hessian_, layout.dim(), layout.dim(), "DenseQuadratic hessian");
    detail::require_columns(centers_, layout.dim(), this->num_samples(), "DenseQuadratic centers");
    const Scalar asym = (hessian_ - hessian_.transpose()).norm();
    if (asym > Scalar(1e-12) * hessian_.norm()) {
      throw ConfigError("DenseQuadratic: hessian must be symmetric");
    }
    hessian_ = (Scalar(0.5) * (hessian_ + hessian_.transpose())).eval();
  }

  std::string_view kind() const override { return "dense_quadratic"; }
  const MatrixX<Scalar>& hessian() const { return hessian_; }
  const MatrixX<Scalar>& centers() const { return centers_; }

  std::optional<Scalar> known_minimum() const override {
    // Bounded below only when the Hessian is positive semidefinite.
    Eigen::LDLT<MatrixX<Scalar>> ldlt(hessian_);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
      return std::nullopt;
    }
    return this->full_value(centers_.rowwise().mean());
  }

 protected:
  Scalar sample_value(VectorRef w, Index i) const override {
    const Vector r = w - centers_.col(i);
    return Scalar(0.5) * r.dot(hessian_ * r);
  }
  Vector sample_gradient(VectorRef w, Index i) const override {
    return hessian_ * (w - centers_.col(i));
  }

 private:
  MatrixX<Scalar> hessian_;
  MatrixX<Scalar> centers_;
};

/// f(w; i) = s_i^T w + b_i. Zero Hessian everywhere.
template <typename Scalar>
class LinearObjective final : public FiniteSumObjective<Scalar> {
 public:
  using Base = FiniteSumObjective<Scalar>;
  using typename Base::Vector;
  using typename Base::VectorRef;

  LinearObjective(BlockLayout layout, MatrixX<Scalar> slopes, Vector offsets)
      : Base(layout, slopes.cols()), slopes_(std::move(slopes)), offsets_(std::move(offsets)) {
    detail::require_columns(slopes_, layout.dim(), this->num_samples(), "LinearObjective slopes");
    if (offsets_.size() != this->num_samples()) {
      throw DimensionError("LinearObjective: need one offset per sample");
    }
  }

  LinearObjective(BlockLayout layout, MatrixX<Scalar> slopes)
      : LinearObjective(layout, slopes, Vector::Zero(slopes.cols())) {}

  std::string_view kind() const override { return "linear"; }
  const MatrixX<Scalar>& slopes() const { return slopes_; }
  const Vector& offsets() const { return offsets_; }

 protected:
  Scalar sample_value(VectorRef w, Index i) const override {
    return slopes_.col(i).dot(w) + offsets_[i];
  }
  Vector sample_gradient(VectorRef, Index i) const override { return slopes_.col(i); }

 private:
  MatrixX<Scalar> slopes_;
  Vector offsets_;
};

/// f(w; i) = sum_j cosh(w_j - s_{i,j}). Per sample, every Hessian entry obeys
/// cosh <= 1 + |sinh|, so the curvature grows with the gradient instead of
/// being globally bounded.
template <typename Scalar>
class CoshObjective final : public FiniteSumObjective<Scalar> {
 public:
  using Base = FiniteSumObjective<Scalar>;
  using typename Base::Vector;
  using typename Base::VectorRef;

  CoshObjective(BlockLayout layout, MatrixX<Scalar> shifts)
      : Base(layout, shifts.cols()), shifts_(std::move(shifts)) {
    detail::require_columns(shifts_, layout.dim(), this->num_samples(), "CoshObjective shifts");
  }

  std::string_view kind() const override { return "cosh"; }
  const MatrixX<Scalar>& shifts() const { return shifts_; }

  std::optional<Scalar> known_minimum() const override {
    for (Index i = 1; i < shifts_.cols(); ++i) {
      if (shifts_.col(i) != shifts_.col(0)) {
        return std::nullopt;
      }
    }
    return static_cast<Scalar>(this->dim());
  }

 protected:
  Scalar sample_value(VectorRef w, Index i) const override {
    return (w - shifts_.col(i)).array().cosh().sum();
  }
  Vector sample_gradient(VectorRef w, Index i) const override {
    return (w - shifts_.col(i)).array().sinh().matrix();
  }

 private:
  MatrixX<Scalar> shifts_;
};

/// f(w; i) = log(1 + exp(-b_i z_i^T w)) + (lambda/2) ||w||^2.
template <typename Scalar>
class LogisticObjective final : public FiniteSumObjective<Scalar> {
 public:
  using Base = FiniteSumObjective<Scalar>;
  using typename Base::Vector;
  using typename Base::VectorRef;

  LogisticObjective(BlockLayout layout, MatrixX<Scalar> features, Vector labels, Scalar lambda)
      : Base(layout, features.cols()),
        features_(std::move(features)),
        labels_(std::move(labels)),
        lambda_(lambda) {
    detail::require_columns(features_, layout.dim(), this->num_samples(),
                            "LogisticObjective features");
    if (labels_.size() != this->num_samples()) {
      throw DimensionError("LogisticObjective: need one label per sample");
    }
    for (Index i = 0; i < labels_.size(); ++i) {
      if (labels_[i] != Scalar(1) && labels_[i] != Scalar(-1)) {
        throw ConfigError("LogisticObjective: labels must be +1 or -1");
      }
    }
    if (!(lambda >= 0) || !std::isfinite(lambda)) {
      throw ConfigError("LogisticObjective: lambda must be finite and >= 0");
    }
  }

  std::string_view kind() const override { return "logistic"; }
  const MatrixX<Scalar>& features() const { return features_; }
  const Vector& labels() const { return labels_; }
  Scalar lambda() const { return lambda_; }

  /// max_i ||z_i||^2 / 4 + lambda, an upper bound on every gradient Lipschitz constant.
  Scalar lipschitz_bound() const {
    return features_.colwise().squaredNorm().maxCoeff() / Scalar(4) + lambda_;
  }

 protected:
  Scalar sample_value(VectorRef w, Index i) const override {
    const Scalar t = -labels_[i] * features_.col(i).dot(w);
    return softplus(t) + Scalar(0.5) * lambda_ * w.squaredNorm();
  }
  Vector sample_gradient(VectorRef w, Index i) const override {
    const Scalar t = -labels_[i] * features_.col(i).dot(w);
    return (-labels_[i] * sigmoid(t)) * features_.col(i) + lambda_ * w;
  }

 private:
  static Scalar softplus(Scalar t) {
    using std::exp;
    using std::log1p;
    return t > 0 ? t + log1p(exp(-t)) : log1p(exp(t));
  }
  static Scalar sigmoid(Scalar t) {
    using std::exp;
    if (t >= 0) {
      return Scalar(1) / (Scalar(1) + exp(-t));
    }
    const Scalar e = exp(t);
    return e / (Scalar(1) + e);
  }

  MatrixX<Scalar> features_;
  Vector labels_;
  Scalar lambda_;
};

// Seeded generators. Each data matrix is drawn column by column from the
// given stream, so a (seed, stream id) pair pins the instance.

template <typename Scalar = double>
MatrixX<Scalar> gaussian_columns(RngStream& rng, Index rows, Index cols, Scalar scale) {
  MatrixX<Scalar> m(rows, cols);
  for (Index c = 0; c < cols; ++c) {
    m.col(c) = scale * sample_gaussian<Scalar>(rng, rows);
  }
  return m;
}

template <typename Scalar = double>
BlockQuadratic<Scalar> make_block_quadratic(BlockLayout layout, Index n, Scalar a_x, Scalar a_y,
                                            Scalar center_scale, RngStream& rng) {
  return {layout, gaussian_columns<Scalar>(rng, layout.dim(), n, center_scale), a_x, a_y};
}

/// Hessian (B + B^T)/2 with B standard normal entries.
template <typename Scalar = double>
DenseQuadratic<Scalar> make_dense_quadratic(BlockLayout layout, Index n, Scalar center_scale,
                                            RngStream& rng) {
  const MatrixX<Scalar> b = gaussian_columns<Scalar>(rng, layout.dim(), layout.dim(), Scalar(1));
  MatrixX<Scalar> h = Scalar(0.5) * (b + b.transpose());
  return {layout, std::move(h), gaussian_columns<Scalar>(rng, layout.dim(), n, center_scale)};
}

template <typename Scalar = double>
LinearObjective<Scalar> make_linear(BlockLayout layout, Index n, Scalar slope_scale,
                                    RngStream& rng) {
  MatrixX<Scalar> slopes = gaussian_columns<Scalar>(rng, layout.dim(), n, slope_scale);
  VectorX<Scalar> offsets = sample_gaussian<Scalar>(rng, n);
  return {layout, std::move(slopes), std::move(offsets)};
}

template <typename Scalar = double>
CoshObjective<Scalar> make_cosh(BlockLayout layout, Index n, Scalar shift_scale, RngStream& rng) {
  return {layout, gaussian_columns<Scalar>(rng, layout.dim(), n, shift_scale)};
}

/// Labels are the signs of a hidden linear model, flipped with probability 0.1.
template <typename Scalar = double>
LogisticObjective<Scalar> make_logistic(BlockLayout layout, Index n, Scalar feature_scale,
                                        Scalar lambda, RngStream& rng) {
  MatrixX<Scalar> features = gaussian_columns<Scalar>(rng, layout.dim(), n, feature_scale);
  const VectorX<Scalar> truth = sample_gaussian<Scalar>(rng, layout.dim());
  VectorX<Scalar> labels(n);
  for (Index i = 0; i < n; ++i) {
    Scalar label = features.col(i).dot(truth) >= 0 ? Scalar(1) : Scalar(-1);
    if (rng.uniform() < 0.1) {
      label = -label;
    }
    labels[i] = label;
  }
  return {layout, std::move(features), std::move(labels), lambda};
}

}  // namespace hzo

#endif  // HZO_OBJECTIVES_HPP
