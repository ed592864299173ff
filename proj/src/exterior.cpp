#include "amdkit/exterior.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <string>

#include "amdkit/errors.hpp"

namespace amdkit {

namespace {

constexpr int kMaxDim = 12;

void check_shape(int n, int k) {
  if (n < 1 || n > kMaxDim) {
    throw InvalidInput("form dimension must be in [1, " + std::to_string(kMaxDim) + "], got " +
                       std::to_string(n));
  }
  if (k < 0 || k > n) {
    throw DegreeError("form degree " + std::to_string(k) + " out of range for dimension " +
                      std::to_string(n));
  }
}

void build_combinations(int n, int k, int start, std::vector<int>& current,
                        std::vector<std::vector<int>>& out) {
  if (static_cast<int>(current.size()) == k) {
    out.push_back(current);
    return;
  }
  for (int i = start; i < n; ++i) {
    current.push_back(i);
    build_combinations(n, k, i + 1, current, out);
    current.pop_back();
  }
}

// Sorts `idx` in place and returns the permutation sign, or 0 on a repeat.
int sort_with_sign(std::vector<int>& idx) {
  int sign = 1;
  for (std::size_t i = 1; i < idx.size(); ++i) {
    for (std::size_t j = i; j > 0 && idx[j - 1] > idx[j]; --j) {
      std::swap(idx[j - 1], idx[j]);
      sign = -sign;
    }
  }
  for (std::size_t i = 1; i < idx.size(); ++i) {
    if (idx[i - 1] == idx[i]) return 0;
  }
  return sign;
}

}  // namespace

const std::vector<std::vector<int>>& combinations(int n, int k) {
  check_shape(n, k);
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::unique_ptr<std::vector<std::vector<int>>>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[{n, k}];
  if (!slot) {
    slot = std::make_unique<std::vector<std::vector<int>>>();
    std::vector<int> current;
    build_combinations(n, k, 0, current, *slot);
  }
  return *slot;
}

std::size_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  std::size_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<std::size_t>(n - k + i) / static_cast<std::size_t>(i);
  return r;
}

std::size_t combination_rank(int n, std::span<const int> idx) {
  // Count the combinations that precede `idx` lexicographically.
  const int k = static_cast<int>(idx.size());
  std::size_t rank = 0;
  int prev = -1;
  for (int pos = 0; pos < k; ++pos) {
    if (idx[pos] <= prev || idx[pos] >= n) throw InvalidInput("multi-index is not strictly increasing");
    for (int c = prev + 1; c < idx[pos]; ++c) rank += binomial(n - c - 1, k - pos - 1);
    prev = idx[pos];
  }
  return rank;
}

KForm::KForm(int n, int k) : n_(n), k_(k) {
  check_shape(n, k);
  coeffs_.assign(binomial(n, k), 0.0);
}

KForm::KForm(int n, int k, std::vector<double> coeffs) : n_(n), k_(k), coeffs_(std::move(coeffs)) {
  check_shape(n, k);
  if (coeffs_.size() != binomial(n, k)) {
    throw InvalidInput("KForm expects " + std::to_string(binomial(n, k)) + " coefficients, got " +
                       std::to_string(coeffs_.size()));
  }
}

KForm KForm::basis(int n, std::span<const int> indices) {
  KForm w(n, static_cast<int>(indices.size()));
  std::vector<int> idx(indices.begin(), indices.end());
  for (int i : idx) {
    if (i < 0 || i >= n) throw InvalidInput("basis index out of range");
  }
  const int sign = sort_with_sign(idx);
  if (sign != 0) w.coeffs_[combination_rank(n, idx)] = sign;
  return w;
}

double KForm::coeff(std::span<const int> sorted_indices) const {
  if (static_cast<int>(sorted_indices.size()) != k_) throw InvalidInput("multi-index has wrong length");
  return coeffs_[combination_rank(n_, sorted_indices)];
}

double KForm::norm() const {
  double s = 0.0;
  for (double c : coeffs_) s += c * c;
  return std::sqrt(s);
}

void KForm::require_same_shape(const KForm& other) const {
  if (n_ != other.n_ || k_ != other.k_) {
    throw InvalidInput("form shape mismatch: (" + std::to_string(n_) + "," + std::to_string(k_) +
                       ") vs (" + std::to_string(other.n_) + "," + std::to_string(other.k_) + ")");
  }
}

KForm& KForm::operator+=(const KForm& other) {
  require_same_shape(other);
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += other.coeffs_[i];
  return *this;
}

KForm& KForm::operator-=(const KForm& other) {
  require_same_shape(other);
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= other.coeffs_[i];
  return *this;
}

KForm& KForm::operator*=(double s) {
  for (double& c : coeffs_) c *= s;
  return *this;
}

Frame::Frame(Mat columns) : columns_(std::move(columns)) {
  if (columns_.rows() < 1) throw InvalidInput("frame vectors must have dimension >= 1");
  if (columns_.cols() > columns_.rows()) throw InvalidInput("frame has more vectors than dimensions");
}

Frame::Frame(int n, const std::vector<Vec>& vectors) : columns_(n, static_cast<Eigen::Index>(vectors.size())) {
  if (static_cast<int>(vectors.size()) > n) throw InvalidInput("frame has more vectors than dimensions");
  for (std::size_t j = 0; j < vectors.size(); ++j) {
    if (vectors[j].size() != n) throw InvalidInput("frame vector has wrong dimension");
    columns_.col(static_cast<Eigen::Index>(j)) = vectors[j];
  }
}

double small_det(const Mat& m) {
  switch (m.rows()) {
    case 0:
      return 1.0;
    case 1:
      return m(0, 0);
    case 2:
      return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    case 3:
      return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
             m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
             m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
    default:
      return m.partialPivLu().determinant();
  }
}

KForm wedge(const KForm& a, const KForm& b) {
  if (a.dim() != b.dim()) throw InvalidInput("wedge of forms on different dimensions");
  const int n = a.dim();
  if (a.degree() + b.degree() > n) {
    throw DegreeError("wedge degree " + std::to_string(a.degree() + b.degree()) + " exceeds dimension " +
                      std::to_string(n));
  }
  KForm out(n, a.degree() + b.degree());
  const auto& ca = combinations(n, a.degree());
  const auto& cb = combinations(n, b.degree());
  std::vector<int> merged;
  for (std::size_t i = 0; i < ca.size(); ++i) {
    const double ai = a.coeffs()[i];
    if (ai == 0.0) continue;
    for (std::size_t j = 0; j < cb.size(); ++j) {
      const double bj = b.coeffs()[j];
      if (bj == 0.0) continue;
      merged = ca[i];
      merged.insert(merged.end(), cb[j].begin(), cb[j].end());
      const int sign = sort_with_sign(merged);
      if (sign == 0) continue;
      out.coeffs()[combination_rank(n, merged)] += sign * ai * bj;
    }
  }
  return out;
}

double evaluate(const KForm& w, const Mat& columns) {
  if (columns.rows() != w.dim() || columns.cols() != w.degree()) {
    throw InvalidInput("frame of " + std::to_string(columns.cols()) + " vectors in R^" +
                       std::to_string(columns.rows()) + " does not match a " + std::to_string(w.degree()) +
                       "-form on R^" + std::to_string(w.dim()));
  }
  const int k = w.degree();
  const auto& combos = combinations(w.dim(), k);
  Mat minor(k, k);
  double sum = 0.0;
  for (std::size_t c = 0; c < combos.size(); ++c) {
    const double coeff = w.coeffs()[c];
    if (coeff == 0.0) continue;
    for (int r = 0; r < k; ++r) minor.row(r) = columns.row(combos[c][r]);
    sum += coeff * small_det(minor);
  }
  return sum;
}

double evaluate(const KForm& w, const Frame& f) { return evaluate(w, f.matrix()); }

KForm pullback_linear(const KForm& w, const Mat& a) {
  if (a.rows() != w.dim() || a.cols() != w.dim()) {
    throw InvalidInput("pullback needs a " + std::to_string(w.dim()) + "x" + std::to_string(w.dim()) +
                       " matrix");
  }
  const int n = w.dim();
  const int k = w.degree();
  const auto& combos = combinations(n, k);
  KForm out(n, k);
  Mat cols(n, k);
  for (std::size_t i = 0; i < combos.size(); ++i) {
    for (int j = 0; j < k; ++j) cols.col(j) = a.col(combos[i][j]);
    out.coeffs()[i] = evaluate(w, cols);
  }
  return out;
}

double comass_sample(const KForm& w, int trials, std::uint64_t seed) {
  if (trials < 1) throw InvalidInput("comass_sample needs at least one trial");
  const int n = w.dim();
  const int k = w.degree();
  if (k == 0) return std::abs(w.coeffs()[0]);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double best = 0.0;
  Mat g(n, k);
  for (int t = 0; t < trials; ++t) {
    for (int c = 0; c < k; ++c)
      for (int r = 0; r < n; ++r) g(r, c) = gauss(rng);
    Eigen::HouseholderQR<Mat> qr(g);
    const Mat q = qr.householderQ() * Mat::Identity(n, k);
    best = std::max(best, std::abs(evaluate(w, q)));
  }
  return best;
}

}  // namespace amdkit
