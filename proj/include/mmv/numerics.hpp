#pragma once

#include <vector>

#include "mmv/mat.hpp"
#include "mmv/rng.hpp"

namespace mmv {

/// Minimizes ||a*x - b||_F via Householder QR. Requires a.rows >= a.cols and
/// numerically full column rank; throws std::runtime_error naming the failed
/// tolerance otherwise. Tolerance: max(rows,cols) * eps * |R11|.
Mat lstsq(const Mat& a, const Mat& b);

/// y - a_sub * lstsq(a_sub, y): the component of y orthogonal to range(a_sub).
Mat projection_residual(const Mat& a_sub, const Mat& y);

/// (A (x) I_k) * x_stacked without materializing the Kronecker product.
Mat kron_block_apply(const Mat& a, int k, const Mat& x_stacked);

/// vec(X^T) as a column vector: row i of X occupies entries i*K .. (i+1)*K-1.
Mat stack_rows(const Mat& x);

/// Inverse of stack_rows for a vector of length rows*k.
Mat unstack_rows(const Mat& v, int rows, int k);

/// The real embedding [[Re, -Im], [Im, Re]] (2m x 2n).
Mat complex_to_real_stacked(const CMat& a);

/// Column-wise [Re; Im] stacking (2m x n), the vector-side companion of
/// complex_to_real_stacked.
Mat real_stack_cols(const CMat& a);
CMat real_unstack_cols(const Mat& a);

Mat gaussian(RngState& rng, int rows, int cols);
CMat complex_gaussian(RngState& rng, int rows, int cols);  // CN(0,1) per entry

}  // namespace mmv
