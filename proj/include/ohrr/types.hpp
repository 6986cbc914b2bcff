#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <utility>

namespace ohrr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class ErrorKind {
  InvalidMatrix,
  DimMismatch,
  NotPositiveDefinite,
  JointCovarianceNotPSD,
  DistortionBlockNotPSD,
  HelperAlreadyFullRank,
  InfiniteRate,
  InfiniteObjective,
  InfeasibleDistortion,
  RankDeficiencyInconsistent,
  NoConvergedStart,
  DimensionTooLarge,
  SupportDetectionFailed,
  DeltaInconsistent,
  DeltaNotPsd,
  DeltaZero,
  RankConditionViolated,
  ConstructionStalled,
  ProjectionIdentityFailed,
  EnhancementIdentityFailed,
  BoundGapExceedsTolerance,
  ChannelModelMismatch,
  SingularSampleCovariance,
  ParseError,
};

const char* error_kind_name(ErrorKind k);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(std::string(error_kind_name(kind)) + ": " + msg),
        kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

/// Tolerance policy shared by every PSD / rank / residual decision.
/// All thresholds are relative, scaled by the largest eigenvalue of the
/// matrix being tested (see matcore).
struct TolPolicy {
  double eps_sym = 1e-8;
  double eps_psd = 1e-9;
  double eps_rank = 1e-9;
  double eps_residual = 1e-7;
};

/// Dense real symmetric matrix. Symmetrized on construction; asymmetry
/// beyond eps_sym is an error, below it is silently repaired.
class SymMat {
 public:
  SymMat() = default;

  explicit SymMat(Matrix a, double eps_sym = TolPolicy{}.eps_sym) {
    if (a.rows() != a.cols() || a.rows() == 0)
      throw Error(ErrorKind::InvalidMatrix, "matrix must be square and nonempty");
    if (!a.allFinite())
      throw Error(ErrorKind::InvalidMatrix, "matrix has non-finite entries");
    const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
    if (asym > eps_sym)
      throw Error(ErrorKind::InvalidMatrix,
                  "asymmetry " + std::to_string(asym) + " exceeds eps_sym");
    m_ = 0.5 * (a + a.transpose());
  }

  static SymMat identity(int dim) { return SymMat(Matrix::Identity(dim, dim)); }
  static SymMat zero(int dim) { return SymMat(Matrix::Zero(dim, dim)); }

  int dim() const { return static_cast<int>(m_.rows()); }
  const Matrix& mat() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }

  double frobenius() const { return m_.norm(); }

 private:
  Matrix m_;
};

inline SymMat sym(const Matrix& a) { return SymMat(0.5 * (a + a.transpose())); }

/// Eigendecomposition with eigenvalues in descending order.
struct EigenDecomp {
  Vector values;
  Matrix vectors;  // columns, orthonormal
};

}  // namespace ohrr
