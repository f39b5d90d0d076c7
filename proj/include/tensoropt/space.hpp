#pragma once
// Finite-dimensional Euclidean space with a self-adjoint positive-definite
// metric B and the conjugate norm pair ||x|| = <Bx,x>^{1/2},
// ||s||_* = <s, B^{-1}s>^{1/2}.

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace tensoropt {

using Vector = Eigen::VectorXd;      // points of the primal space E
using DualVector = Eigen::VectorXd;  // linear functionals on E (gradients)

inline void require_dim(const Eigen::VectorXd& v, Eigen::Index dim, const char* what) {
  if (v.size() != dim) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                std::to_string(v.size()) + " vs " + std::to_string(dim) + ")");
  }
}

inline void require_finite(const Eigen::VectorXd& v, const char* what) {
  if (!v.allFinite()) {
    throw std::invalid_argument(std::string(what) + ": non-finite entries");
  }
}

// <s, x> for s in the dual space and x in the primal space.
inline double pairing(const DualVector& s, const Vector& x) {
  require_dim(s, x.size(), "pairing");
  return s.dot(x);
}

class MetricSpace {
 public:
  static MetricSpace identity(int dim) {
    check_dim(dim);
    MetricSpace m;
    m.kind_ = Kind::Identity;
    m.dim_ = dim;
    return m;
  }

  static MetricSpace diagonal(Vector diag) {
    check_dim(static_cast<int>(diag.size()));
    if (!(diag.array() > 0.0).all() || !diag.allFinite()) {
      throw std::invalid_argument("MetricSpace::diagonal: entries must be positive and finite");
    }
    MetricSpace m;
    m.kind_ = Kind::Diagonal;
    m.dim_ = static_cast<int>(diag.size());
    m.diag_ = std::move(diag);
    return m;
  }

  // Dense symmetric positive-definite B; the Cholesky factor is computed once
  // here and reused by every B^{-1} application.
  static MetricSpace dense_spd(Eigen::MatrixXd b) {
    if (b.rows() != b.cols()) throw std::invalid_argument("MetricSpace::dense_spd: B must be square");
    check_dim(static_cast<int>(b.rows()));
    const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
    if (!b.allFinite() || (b - b.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
      throw std::invalid_argument("MetricSpace::dense_spd: B must be finite and symmetric");
    }
    MetricSpace m;
    m.kind_ = Kind::Dense;
    m.dim_ = static_cast<int>(b.rows());
    m.b_ = std::move(b);
    m.llt_.compute(m.b_);
    if (m.llt_.info() != Eigen::Success) {
      throw std::invalid_argument("MetricSpace::dense_spd: B is not positive definite");
    }
    return m;
  }

  int dim() const { return dim_; }
  bool is_identity() const { return kind_ == Kind::Identity; }
  bool is_diagonal_like() const { return kind_ != Kind::Dense; }

  // B x
  DualVector apply(const Vector& x) const {
    require_dim(x, dim_, "MetricSpace::apply");
    switch (kind_) {
      case Kind::Identity: return x;
      case Kind::Diagonal: return diag_.cwiseProduct(x);
      default: return b_ * x;
    }
  }

  // B^{-1} s
  Vector solve(const DualVector& s) const {
    require_dim(s, dim_, "MetricSpace::solve");
    switch (kind_) {
      case Kind::Identity: return s;
      case Kind::Diagonal: return s.cwiseQuotient(diag_);
      default: return llt_.solve(s);
    }
  }

  double primal_norm(const Vector& x) const {
    require_dim(x, dim_, "MetricSpace::primal_norm");
    if (kind_ == Kind::Identity) return x.norm();
    return std::sqrt(std::max(0.0, x.dot(apply(x))));
  }

  double dual_norm(const DualVector& s) const {
    require_dim(s, dim_, "MetricSpace::dual_norm");
    if (kind_ == Kind::Identity) return s.norm();
    return std::sqrt(std::max(0.0, s.dot(solve(s))));
  }

  // Diagonal of B as a vector; valid for Identity and Diagonal kinds.
  Vector diagonal_entries() const {
    if (kind_ == Kind::Identity) return Vector::Ones(dim_);
    if (kind_ == Kind::Diagonal) return diag_;
    throw std::logic_error("MetricSpace::diagonal_entries: dense metric");
  }

  Eigen::MatrixXd dense() const {
    switch (kind_) {
      case Kind::Identity: return Eigen::MatrixXd::Identity(dim_, dim_);
      case Kind::Diagonal: return diag_.asDiagonal();
      default: return b_;
    }
  }

 private:
  enum class Kind { Identity, Diagonal, Dense };

  static void check_dim(int dim) {
    if (dim < 1) throw std::invalid_argument("MetricSpace: dimension must be >= 1");
  }

  MetricSpace() = default;

  Kind kind_ = Kind::Identity;
  int dim_ = 0;
  Vector diag_;
  Eigen::MatrixXd b_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

}  // namespace tensoropt
