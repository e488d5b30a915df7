#include "mmv/numerics.hpp"

#include <cmath>
#include <limits>

namespace mmv {

Mat lstsq(const Mat& a, const Mat& b) {
  const int m = a.rows, n = a.cols;
  if (m < n) throw std::invalid_argument("lstsq: underdetermined system (rows < cols)");
  if (b.rows != m) throw std::invalid_argument("lstsq: rhs row count mismatch");

  // Householder QR: reflectors live below the diagonal of qr, R strictly
  // above; rdiag carries the diagonal of R.
  Mat qr = a;
  std::vector<double> rdiag(n, 0.0);
  for (int k = 0; k < n; ++k) {
    double nrm = 0.0;
    for (int i = k; i < m; ++i) nrm = std::hypot(nrm, qr(i, k));
    if (nrm != 0.0) {
      if (qr(k, k) < 0) nrm = -nrm;
      for (int i = k; i < m; ++i) qr(i, k) /= nrm;
      qr(k, k) += 1.0;
      for (int j = k + 1; j < n; ++j) {
        double s = 0.0;
        for (int i = k; i < m; ++i) s += qr(i, k) * qr(i, j);
        s = -s / qr(k, k);
        for (int i = k; i < m; ++i) qr(i, j) += s * qr(i, k);
      }
    }
    rdiag[k] = -nrm;
  }

  const double eps = std::numeric_limits<double>::epsilon();
  const double tol = static_cast<double>(std::max(m, n)) * eps * std::fabs(rdiag[0]);
  for (int j = 0; j < n; ++j) {
    if (std::fabs(rdiag[j]) <= tol)
      throw std::runtime_error("lstsq: rank-deficient matrix: |R(" + std::to_string(j) + "," +
                               std::to_string(j) + ")| = " + std::to_string(std::fabs(rdiag[j])) +
                               " <= tolerance " + std::to_string(tol));
  }

  // Apply the reflectors to b in place.
  Mat qtb = b;
  for (int k = 0; k < n; ++k) {
    if (qr(k, k) == 0.0) continue;
    for (int c = 0; c < b.cols; ++c) {
      double s = 0.0;
      for (int i = k; i < m; ++i) s += qr(i, k) * qtb(i, c);
      s = -s / qr(k, k);
      for (int i = k; i < m; ++i) qtb(i, c) += s * qr(i, k);
    }
  }

  // Back-substitute R x = (Q^T b)[0:n].
  Mat x(n, b.cols);
  for (int c = 0; c < b.cols; ++c) {
    for (int i = n - 1; i >= 0; --i) {
      double s = qtb(i, c);
      for (int j = i + 1; j < n; ++j) s -= qr(i, j) * x(j, c);
      x(i, c) = s / rdiag[i];
    }
  }
  if (!x.is_finite()) throw std::runtime_error("lstsq: non-finite solution");
  return x;
}

Mat projection_residual(const Mat& a_sub, const Mat& y) {
  if (a_sub.rows != y.rows) throw std::invalid_argument("projection_residual: row mismatch");
  return sub(y, matmul(a_sub, lstsq(a_sub, y)));
}

Mat kron_block_apply(const Mat& a, int k, const Mat& x_stacked) {
  if (k <= 0) throw std::invalid_argument("kron_block_apply: k must be positive");
  if (x_stacked.cols != 1 || x_stacked.rows != a.cols * k)
    throw std::invalid_argument("kron_block_apply: x length must be a.cols*k");
  Mat y(a.rows * k, 1);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < a.cols; ++j) {
      const double aij = a(i, j);
      if (aij == 0.0) continue;
      for (int t = 0; t < k; ++t) y(i * k + t, 0) += aij * x_stacked(j * k + t, 0);
    }
  return y;
}

Mat stack_rows(const Mat& x) {
  Mat v(x.rows * x.cols, 1);
  for (int i = 0; i < x.rows; ++i)
    for (int j = 0; j < x.cols; ++j) v(i * x.cols + j, 0) = x(i, j);
  return v;
}

Mat unstack_rows(const Mat& v, int rows, int k) {
  if (v.cols != 1 || v.rows != rows * k)
    throw std::invalid_argument("unstack_rows: length mismatch");
  Mat x(rows, k);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < k; ++j) x(i, j) = v(i * k + j, 0);
  return x;
}

Mat complex_to_real_stacked(const CMat& a) {
  const int m = a.rows(), n = a.cols();
  Mat out(2 * m, 2 * n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      out(i, j) = a.re(i, j);
      out(i, n + j) = -a.im(i, j);
      out(m + i, j) = a.im(i, j);
      out(m + i, n + j) = a.re(i, j);
    }
  return out;
}

Mat real_stack_cols(const CMat& a) {
  const int m = a.rows(), n = a.cols();
  Mat out(2 * m, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < m; ++i) {
      out(i, j) = a.re(i, j);
      out(m + i, j) = a.im(i, j);
    }
  return out;
}

CMat real_unstack_cols(const Mat& a) {
  if (a.rows % 2 != 0) throw std::invalid_argument("real_unstack_cols: odd row count");
  const int m = a.rows / 2;
  CMat out(m, a.cols);
  for (int j = 0; j < a.cols; ++j)
    for (int i = 0; i < m; ++i) {
      out.re(i, j) = a(i, j);
      out.im(i, j) = a(m + i, j);
    }
  return out;
}

Mat gaussian(RngState& rng, int rows, int cols) {
  Mat m(rows, cols);
  for (double& v : m.data) v = rng.normal();
  return m;
}

CMat complex_gaussian(RngState& rng, int rows, int cols) {
  const double s = std::sqrt(0.5);
  CMat m(rows, cols);
  for (size_t i = 0; i < m.re.data.size(); ++i) {
    m.re.data[i] = s * rng.normal();
    m.im.data[i] = s * rng.normal();
  }
  return m;
}

}  // namespace mmv
