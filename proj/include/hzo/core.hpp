// Block-partitioned parameter vectors and the error types shared by every
// module of the library.
#ifndef HZO_CORE_HPP
#define HZO_CORE_HPP

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

namespace hzo {

using Index = Eigen::Index;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Argument has the wrong dimension for the layout it is used with.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Sample index outside [0, n).
struct IndexError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

/// Invalid configuration value (non-positive step size, zero epochs, ...).
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A computation produced a NaN or infinity where a finite value is required.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Which part of the parameter vector an operation acts on.
enum class Block { X, Y, Full };

inline const char* to_string(Block b) {
  switch (b) {
    case Block::X:
      return "x";
    case Block::Y:
      return "y";
    case Block::Full:
      return "full";
  }
  return "?";
}

/// Split of a d-dimensional parameter vector into a base block x (first d_x
/// coordinates) and an adapter block y (remaining d_y coordinates).
class BlockLayout {
 public:
  BlockLayout(Index d_x, Index d_y) : d_x_(d_x), d_y_(d_y) {
    if (d_x < 1 || d_y < 1) {
      throw DimensionError("BlockLayout: both blocks need at least one coordinate (got d_x=" +
                           std::to_string(d_x) + ", d_y=" + std::to_string(d_y) + ")");
    }
  }

  Index d_x() const { return d_x_; }
  Index d_y() const { return d_y_; }
  Index dim() const { return d_x_ + d_y_; }

  Index offset(Block b) const { return b == Block::Y ? d_x_ : 0; }
  Index size(Block b) const {
    switch (b) {
      case Block::X:
        return d_x_;
      case Block::Y:
        return d_y_;
      case Block::Full:
        return dim();
    }
    return 0;
  }

  friend bool operator==(const BlockLayout&, const BlockLayout&) = default;

 private:
  Index d_x_;
  Index d_y_;
};

template <typename Derived>
auto block_segment(const Eigen::MatrixBase<Derived>& v, const BlockLayout& layout, Block b) {
  return v.segment(layout.offset(b), layout.size(b));
}

template <typename Derived>
auto block_segment(Eigen::MatrixBase<Derived>& v, const BlockLayout& layout, Block b) {
  return v.segment(layout.offset(b), layout.size(b));
}

/// Zero-pads a block-sized vector to the full dimension.
template <typename Derived>
VectorX<typename Derived::Scalar> embed(const Eigen::MatrixBase<Derived>& part,
                                        const BlockLayout& layout, Block b) {
  if (part.size() != layout.size(b)) {
    throw DimensionError("embed: vector of size " + std::to_string(part.size()) +
                         " does not match block '" + to_string(b) + "' of size " +
                         std::to_string(layout.size(b)));
  }
  VectorX<typename Derived::Scalar> full = VectorX<typename Derived::Scalar>::Zero(layout.dim());
  full.segment(layout.offset(b), layout.size(b)) = part;
  return full;
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& v) {
  return v.allFinite();
}

/// A parameter vector tagged with its block layout. Entries are always finite.
template <typename Scalar>
class HybridPoint {
 public:
  using Vector = VectorX<Scalar>;

  HybridPoint(BlockLayout layout, Vector values) : layout_(layout), values_(std::move(values)) {
    if (values_.size() != layout_.dim()) {
      throw DimensionError("HybridPoint: expected " + std::to_string(layout_.dim()) +
                           " values, got " + std::to_string(values_.size()));
    }
    if (!values_.allFinite()) {
      throw NumericError("HybridPoint: non-finite entry");
    }
  }

  static HybridPoint zeros(BlockLayout layout) { return {layout, Vector::Zero(layout.dim())}; }

  /// Concatenates the two blocks.
  static HybridPoint from_blocks(const Vector& x, const Vector& y) {
    Vector v(x.size() + y.size());
    v << x, y;
    return {BlockLayout(x.size(), y.size()), std::move(v)};
  }

  const BlockLayout& layout() const { return layout_; }
  const Vector& values() const { return values_; }
  Index dim() const { return values_.size(); }

  auto x() const { return values_.head(layout_.d_x()); }
  auto y() const { return values_.tail(layout_.d_y()); }
  auto block(Block b) const { return block_segment(values_, layout_, b); }

  friend bool operator==(const HybridPoint& a, const HybridPoint& b) {
    return a.layout_ == b.layout_ && a.values_ == b.values_;
  }

 private:
  BlockLayout layout_;
  Vector values_;
};

using HybridPointd = HybridPoint<double>;

}  // namespace hzo

#endif  // HZO_CORE_HPP
