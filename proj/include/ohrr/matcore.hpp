#pragma once

#include "ohrr/types.hpp"

namespace ohrr {

/// Eigendecomposition of a symmetric matrix, eigenvalues descending.
EigenDecomp sym_eig(const SymMat& a);

/// Largest-magnitude eigenvalue (spectral norm of a symmetric matrix).
double spectral_norm(const SymMat& a);

/// True iff lambda_min(A) >= -eps_psd * max(1, ||A||_2).
bool is_psd(const SymMat& a, const TolPolicy& tol = {});

/// Loewner order: A <= B iff B - A is PSD.
bool loewner_leq(const SymMat& a, const SymMat& b, const TolPolicy& tol = {});

/// log2 |A| for positive definite A.
double logdet2(const SymMat& a);

/// Natural-log determinant for positive definite A.
double logdet_nat(const SymMat& a);

/// Moore-Penrose inverse via eigenvalue thresholding at eps_rank * lambda_max.
SymMat pinv(const SymMat& a, const TolPolicy& tol = {});

/// Rank by relative eigenvalue thresholding at eps_rank * lambda_max.
int rank_of(const SymMat& a, const TolPolicy& tol = {});

/// Lemma-10 generalized Schur complement test for the block matrix
/// [[E, F^T], [F, G]]: G >= 0, E - F^T G^+ F >= 0, (I - G G^+) F = 0.
/// Must agree with a direct eigencheck of the assembled matrix.
bool schur_psd_blocks(const SymMat& e, const Matrix& f, const SymMat& g,
                      const TolPolicy& tol = {});

/// Nearest PSD matrix in Frobenius norm (eigenvalue clipping at 0).
SymMat project_psd(const SymMat& a);

/// Negative part: sum over negative eigenvalues of lambda * v v^T (PSD's
/// complement; zero matrix iff A is PSD exactly).
Matrix negative_part(const Matrix& a);

/// Positive part: sum over strictly positive eigenvalues of lambda * v v^T.
Matrix positive_part(const Matrix& a);

/// Smallest eigenvalue.
double lambda_min(const SymMat& a);

/// Orthonormal basis (columns) of the eigenspace with relative eigenvalue
/// magnitude below eps_rank * max(lambda_max, floor). Empty matrix when the
/// null space is trivial.
Matrix null_basis(const SymMat& a, const TolPolicy& tol = {});

/// Orthonormal basis (columns) of the range (eigenvalues above threshold).
Matrix range_basis(const SymMat& a, const TolPolicy& tol = {});

}  // namespace ohrr
