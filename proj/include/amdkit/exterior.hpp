#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace amdkit {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Strictly increasing k-subsets of {0, ..., n-1} in lexicographic order.
/// The returned reference stays valid for the life of the program.
const std::vector<std::vector<int>>& combinations(int n, int k);

std::size_t binomial(int n, int k);

/// Position of a strictly increasing index tuple in `combinations(n, k)`.
std::size_t combination_rank(int n, std::span<const int> sorted_indices);

/// Constant-coefficient alternating k-form on R^n, stored densely over the
/// increasing multi-indices of `combinations(n, k)`.
class KForm {
 public:
  KForm(int n, int k);
  KForm(int n, int k, std::vector<double> coeffs);

  /// dx_{i1} ^ ... ^ dx_{ik} for indices in any order; repeated indices give
  /// the zero form.
  static KForm basis(int n, std::span<const int> indices);
  static KForm basis(int n, std::initializer_list<int> indices) {
    return basis(n, std::span<const int>(indices.begin(), indices.size()));
  }

  int dim() const { return n_; }
  int degree() const { return k_; }
  std::span<const double> coeffs() const { return coeffs_; }
  std::span<double> coeffs() { return coeffs_; }
  double coeff(std::span<const int> sorted_indices) const;

  /// Euclidean norm of the coefficient vector.
  double norm() const;

  KForm& operator+=(const KForm& other);
  KForm& operator-=(const KForm& other);
  KForm& operator*=(double s);
  friend KForm operator+(KForm a, const KForm& b) { return a += b; }
  friend KForm operator-(KForm a, const KForm& b) { return a -= b; }
  friend KForm operator*(double s, KForm a) { return a *= s; }
  friend KForm operator-(KForm a) { return a *= -1.0; }

 private:
  void require_same_shape(const KForm& other) const;

  int n_;
  int k_;
  std::vector<double> coeffs_;
};

/// k vectors in R^n stored as the columns of an n x k matrix.
class Frame {
 public:
  explicit Frame(Mat columns);
  Frame(int n, const std::vector<Vec>& vectors);

  int dim() const { return static_cast<int>(columns_.rows()); }
  int size() const { return static_cast<int>(columns_.cols()); }
  const Mat& matrix() const { return columns_; }

 private:
  Mat columns_;
};

KForm wedge(const KForm& a, const KForm& b);

double evaluate(const KForm& w, const Frame& f);
/// Same as above on the columns of an n x k matrix; used on hot paths.
double evaluate(const KForm& w, const Mat& columns);

/// (A^* w)(v_1, ..., v_k) = w(A v_1, ..., A v_k).
KForm pullback_linear(const KForm& w, const Mat& a);

/// Lower bound on the comass: max of |w| over `trials` random orthonormal
/// k-frames (orthonormalized Gaussian draws). Deterministic in `seed`.
double comass_sample(const KForm& w, int trials, std::uint64_t seed);

/// Determinant of a small square matrix, closed form up to 3x3.
double small_det(const Mat& m);

}  // namespace amdkit
