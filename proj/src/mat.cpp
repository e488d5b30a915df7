#include "mmv/mat.hpp"

#include <cmath>

namespace mmv {

Mat::Mat(std::initializer_list<std::initializer_list<double>> init) {
  rows = static_cast<int>(init.size());
  cols = rows ? static_cast<int>(init.begin()->size()) : 0;
  data.reserve(static_cast<size_t>(rows) * cols);
  for (const auto& row : init) {
    if (static_cast<int>(row.size()) != cols)
      throw std::invalid_argument("Mat: ragged initializer");
    data.insert(data.end(), row.begin(), row.end());
  }
}

Mat Mat::identity(int n) {
  Mat m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

bool Mat::is_finite() const {
  for (double v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

Mat Mat::col(int j) const {
  Mat v(rows, 1);
  for (int i = 0; i < rows; ++i) v(i, 0) = (*this)(i, j);
  return v;
}

void Mat::set_col(int j, const Mat& v) {
  if (v.rows != rows || v.cols != 1) throw std::invalid_argument("set_col: shape mismatch");
  for (int i = 0; i < rows; ++i) (*this)(i, j) = v(i, 0);
}

std::vector<double> Mat::col_vec(int j) const {
  std::vector<double> v(rows);
  for (int i = 0; i < rows; ++i) v[i] = (*this)(i, j);
  return v;
}

Mat Mat::cols_subset(const std::vector<int>& idx) const {
  Mat out(rows, static_cast<int>(idx.size()));
  for (int j = 0; j < out.cols; ++j) {
    int src = idx[j];
    if (src < 0 || src >= cols) throw std::invalid_argument("cols_subset: index out of range");
    for (int i = 0; i < rows; ++i) out(i, j) = (*this)(i, src);
  }
  return out;
}

Mat matmul(const Mat& a, const Mat& b) {
  if (a.cols != b.rows)
    throw std::invalid_argument("matmul: dimension mismatch (" + std::to_string(a.rows) + "x" +
                                std::to_string(a.cols) + " * " + std::to_string(b.rows) + "x" +
                                std::to_string(b.cols) + ")");
  Mat c(a.rows, b.cols);
  const int n = b.cols;
  // i-k-j order keeps the inner loop contiguous in both b and c.
  for (int i = 0; i < a.rows; ++i) {
    double* ci = &c.data[static_cast<size_t>(i) * n];
    const double* ai = &a.data[static_cast<size_t>(i) * a.cols];
    for (int k = 0; k < a.cols; ++k) {
      const double aik = ai[k];
      if (aik == 0.0) continue;
      const double* bk = &b.data[static_cast<size_t>(k) * n];
      for (int j = 0; j < n; ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

Mat transpose(const Mat& a) {
  Mat t(a.cols, a.rows);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
  return t;
}

Mat add(const Mat& a, const Mat& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("add: shape mismatch");
  Mat c = a;
  for (size_t i = 0; i < c.data.size(); ++i) c.data[i] += b.data[i];
  return c;
}

Mat sub(const Mat& a, const Mat& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("sub: shape mismatch");
  Mat c = a;
  for (size_t i = 0; i < c.data.size(); ++i) c.data[i] -= b.data[i];
  return c;
}

Mat scale(const Mat& a, double s) {
  Mat c = a;
  for (double& v : c.data) v *= s;
  return c;
}

double dot(const Mat& a, const Mat& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("dot: shape mismatch");
  double s = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i) s += a.data[i] * b.data[i];
  return s;
}

double frobenius_norm(const Mat& x) {
  double s = 0.0;
  for (double v : x.data) s += v * v;
  return std::sqrt(s);
}

Mat from_vec(const std::vector<double>& v) {
  Mat m(static_cast<int>(v.size()), 1);
  m.data = v;
  return m;
}

CMat::CMat(Mat re_, Mat im_) : re(std::move(re_)), im(std::move(im_)) {
  if (!re.same_shape(im)) throw std::invalid_argument("CMat: re/im shape mismatch");
}

CMat cmul(const CMat& a, const CMat& b) {
  CMat c;
  c.re = sub(matmul(a.re, b.re), matmul(a.im, b.im));
  c.im = add(matmul(a.re, b.im), matmul(a.im, b.re));
  return c;
}

CMat cadd(const CMat& a, const CMat& b) { return CMat(add(a.re, b.re), add(a.im, b.im)); }
CMat csub(const CMat& a, const CMat& b) { return CMat(sub(a.re, b.re), sub(a.im, b.im)); }
CMat cscale(const CMat& a, double s) { return CMat(scale(a.re, s), scale(a.im, s)); }

CMat hermitian(const CMat& a) { return CMat(transpose(a.re), scale(transpose(a.im), -1.0)); }

double frobenius_norm(const CMat& x) {
  double r = frobenius_norm(x.re), i = frobenius_norm(x.im);
  return std::sqrt(r * r + i * i);
}

}  // namespace mmv
