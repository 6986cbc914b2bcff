#include "ohrr/matcore.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>

namespace ohrr {

const char* error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::InvalidMatrix: return "InvalidMatrix";
    case ErrorKind::DimMismatch: return "DimMismatch";
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::JointCovarianceNotPSD: return "JointCovarianceNotPSD";
    case ErrorKind::DistortionBlockNotPSD: return "DistortionBlockNotPSD";
    case ErrorKind::HelperAlreadyFullRank: return "HelperAlreadyFullRank";
    case ErrorKind::InfiniteRate: return "InfiniteRate";
    case ErrorKind::InfiniteObjective: return "InfiniteObjective";
    case ErrorKind::InfeasibleDistortion: return "InfeasibleDistortion";
    case ErrorKind::RankDeficiencyInconsistent: return "RankDeficiencyInconsistent";
    case ErrorKind::NoConvergedStart: return "NoConvergedStart";
    case ErrorKind::DimensionTooLarge: return "DimensionTooLarge";
    case ErrorKind::SupportDetectionFailed: return "SupportDetectionFailed";
    case ErrorKind::DeltaInconsistent: return "DeltaInconsistent";
    case ErrorKind::DeltaNotPsd: return "DeltaNotPsd";
    case ErrorKind::DeltaZero: return "DeltaZero";
    case ErrorKind::RankConditionViolated: return "RankConditionViolated";
    case ErrorKind::ConstructionStalled: return "ConstructionStalled";
    case ErrorKind::ProjectionIdentityFailed: return "ProjectionIdentityFailed";
    case ErrorKind::EnhancementIdentityFailed: return "EnhancementIdentityFailed";
    case ErrorKind::BoundGapExceedsTolerance: return "BoundGapExceedsTolerance";
    case ErrorKind::ChannelModelMismatch: return "ChannelModelMismatch";
    case ErrorKind::SingularSampleCovariance: return "SingularSampleCovariance";
    case ErrorKind::ParseError: return "ParseError";
  }
  return "UnknownError";
}

EigenDecomp sym_eig(const SymMat& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a.mat());
  if (es.info() != Eigen::Success)
    throw Error(ErrorKind::InvalidMatrix, "eigendecomposition failed");
  const int n = a.dim();
  EigenDecomp d;
  d.values = es.eigenvalues().reverse();
  d.vectors = es.eigenvectors().rowwise().reverse();
  (void)n;
  return d;
}

double spectral_norm(const SymMat& a) {
  const EigenDecomp d = sym_eig(a);
  return std::max(std::abs(d.values(0)), std::abs(d.values(d.values.size() - 1)));
}

double lambda_min(const SymMat& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a.mat(), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

bool is_psd(const SymMat& a, const TolPolicy& tol) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a.mat(), Eigen::EigenvaluesOnly);
  const Vector& ev = es.eigenvalues();
  const double lmin = ev(0);
  const double norm2 = std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
  return lmin >= -tol.eps_psd * std::max(1.0, norm2);
}

bool loewner_leq(const SymMat& a, const SymMat& b, const TolPolicy& tol) {
  if (a.dim() != b.dim())
    throw Error(ErrorKind::DimMismatch, "loewner_leq dims differ");
  return is_psd(sym(b.mat() - a.mat()), tol);
}

double logdet2(const SymMat& a) {
  TolPolicy tol;
  Eigen::LLT<Matrix> llt(a.mat());
  if (llt.info() != Eigen::Success || lambda_min(a) <= tol.eps_psd * spectral_norm(a))
    throw Error(ErrorKind::NotPositiveDefinite, "logdet2 requires a PD matrix");
  double s = 0.0;
  const auto& l = llt.matrixLLT();
  for (int i = 0; i < a.dim(); ++i) s += std::log2(l(i, i));
  return 2.0 * s;
}

double logdet_nat(const SymMat& a) { return logdet2(a) * std::numbers::ln2; }

SymMat pinv(const SymMat& a, const TolPolicy& tol) {
  const EigenDecomp d = sym_eig(a);
  const double lmax = d.values.cwiseAbs().maxCoeff();
  const double thresh = tol.eps_rank * lmax;
  Vector inv = Vector::Zero(a.dim());
  for (int i = 0; i < a.dim(); ++i)
    if (std::abs(d.values(i)) > thresh && d.values(i) != 0.0)
      inv(i) = 1.0 / d.values(i);
  return sym(d.vectors * inv.asDiagonal() * d.vectors.transpose());
}

int rank_of(const SymMat& a, const TolPolicy& tol) {
  const EigenDecomp d = sym_eig(a);
  const double lmax = d.values.cwiseAbs().maxCoeff();
  if (lmax == 0.0) return 0;
  int r = 0;
  for (int i = 0; i < a.dim(); ++i)
    if (std::abs(d.values(i)) > tol.eps_rank * lmax) ++r;
  return r;
}

bool schur_psd_blocks(const SymMat& e, const Matrix& f, const SymMat& g,
                      const TolPolicy& tol) {
  const int p = e.dim();
  const int q = g.dim();
  if (f.rows() != q || f.cols() != p)
    throw Error(ErrorKind::DimMismatch, "schur_psd_blocks: F must be q x p");
  if (!is_psd(g, tol)) return false;
  const SymMat gp = pinv(g, tol);
  const SymMat schur = sym(e.mat() - f.transpose() * gp.mat() * f);
  if (!is_psd(schur, tol)) return false;
  const Matrix resid = (Matrix::Identity(q, q) - g.mat() * gp.mat()) * f;
  const double scale = std::max({1.0, g.frobenius(), f.norm()});
  return resid.norm() <= tol.eps_residual * scale;
}

SymMat project_psd(const SymMat& a) {
  const EigenDecomp d = sym_eig(a);
  Vector clipped = d.values.cwiseMax(0.0);
  return sym(d.vectors * clipped.asDiagonal() * d.vectors.transpose());
}

Matrix negative_part(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (a + a.transpose()));
  Vector neg = es.eigenvalues().cwiseMin(0.0);
  return es.eigenvectors() * neg.asDiagonal() * es.eigenvectors().transpose();
}

Matrix positive_part(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (a + a.transpose()));
  Vector pos = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * pos.asDiagonal() * es.eigenvectors().transpose();
}

Matrix null_basis(const SymMat& a, const TolPolicy& tol) {
  const EigenDecomp d = sym_eig(a);
  const double lmax = d.values.cwiseAbs().maxCoeff();
  const double thresh = tol.eps_rank * std::max(lmax, 1e-300);
  std::vector<int> idx;
  for (int i = 0; i < a.dim(); ++i)
    if (std::abs(d.values(i)) <= thresh) idx.push_back(i);
  Matrix n(a.dim(), static_cast<int>(idx.size()));
  for (size_t j = 0; j < idx.size(); ++j) n.col(static_cast<int>(j)) = d.vectors.col(idx[j]);
  return n;
}

Matrix range_basis(const SymMat& a, const TolPolicy& tol) {
  const EigenDecomp d = sym_eig(a);
  const double lmax = d.values.cwiseAbs().maxCoeff();
  const double thresh = tol.eps_rank * std::max(lmax, 1e-300);
  std::vector<int> idx;
  for (int i = 0; i < a.dim(); ++i)
    if (std::abs(d.values(i)) > thresh) idx.push_back(i);
  Matrix n(a.dim(), static_cast<int>(idx.size()));
  for (size_t j = 0; j < idx.size(); ++j) n.col(static_cast<int>(j)) = d.vectors.col(idx[j]);
  return n;
}

}  // namespace ohrr
