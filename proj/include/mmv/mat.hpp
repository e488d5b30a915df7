#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace mmv {

/// Dense row-major matrix of doubles. The universal carrier for sensing
/// matrices, measurements, residuals and network weights.
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;  // length rows*cols, row-major

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {
    if (r < 0 || c < 0) throw std::invalid_argument("Mat: negative dimension");
  }
  Mat(std::initializer_list<std::initializer_list<double>> init);

  static Mat identity(int n);

  double& operator()(int i, int j) { return data[static_cast<size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return data[static_cast<size_t>(i) * cols + j]; }

  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
  bool is_finite() const;

  Mat col(int j) const;
  void set_col(int j, const Mat& v);
  std::vector<double> col_vec(int j) const;

  /// Columns of this matrix restricted to `idx`, in the given order.
  Mat cols_subset(const std::vector<int>& idx) const;
};

Mat matmul(const Mat& a, const Mat& b);
Mat transpose(const Mat& a);
Mat add(const Mat& a, const Mat& b);
Mat sub(const Mat& a, const Mat& b);
Mat scale(const Mat& a, double s);
double dot(const Mat& a, const Mat& b);  // entrywise, shapes must match
double frobenius_norm(const Mat& x);

/// Column vector from std::vector.
Mat from_vec(const std::vector<double>& v);

/// Complex matrix as a real/imaginary pair of identical shape.
struct CMat {
  Mat re;
  Mat im;

  CMat() = default;
  CMat(int r, int c) : re(r, c), im(r, c) {}
  CMat(Mat re_, Mat im_);

  int rows() const { return re.rows; }
  int cols() const { return re.cols; }
};

CMat cmul(const CMat& a, const CMat& b);
CMat cadd(const CMat& a, const CMat& b);
CMat csub(const CMat& a, const CMat& b);
CMat cscale(const CMat& a, double s);
CMat hermitian(const CMat& a);
double frobenius_norm(const CMat& x);

}  // namespace mmv
