#include "nsfem/sparse.hpp"

#include <algorithm>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

namespace nsfem {

SparseMatrix::SparseMatrix(int rows, int cols, std::vector<int> row_offsets, std::vector<int> col_indices,
                           std::vector<double> values)
    : rows_(rows),
      cols_(cols),
      row_offsets_(std::move(row_offsets)),
      col_indices_(std::move(col_indices)),
      values_(std::move(values))
{
  if (rows_ < 0 || cols_ < 0) throw std::invalid_argument("SparseMatrix: negative dimension");
  if (row_offsets_.size() != static_cast<std::size_t>(rows_) + 1 || row_offsets_.front() != 0 ||
      row_offsets_.back() != static_cast<int>(col_indices_.size()) || col_indices_.size() != values_.size())
    throw std::invalid_argument("SparseMatrix: inconsistent compressed-row arrays");
  for (int i = 0; i < rows_; ++i) {
    for (int k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
      if (col_indices_[k] < 0 || col_indices_[k] >= cols_)
        throw std::invalid_argument("SparseMatrix: column index out of range in row " + std::to_string(i));
      if (k > row_offsets_[i] && col_indices_[k] <= col_indices_[k - 1])
        throw std::invalid_argument("SparseMatrix: unsorted or duplicate column in row " + std::to_string(i));
    }
  }
}

SparseMatrix SparseMatrix::from_triplets(int rows, int cols, std::vector<Triplet> triplets)
{
  for (const auto& t : triplets)
    if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols)
      throw std::invalid_argument("SparseMatrix::from_triplets: index out of range");
  std::sort(triplets.begin(), triplets.end(),
            [](const Triplet& a, const Triplet& b) { return a.row != b.row ? a.row < b.row : a.col < b.col; });
  std::vector<int> offsets(static_cast<std::size_t>(rows) + 1, 0);
  std::vector<int> cols_out;
  std::vector<double> vals;
  cols_out.reserve(triplets.size());
  vals.reserve(triplets.size());
  for (std::size_t k = 0; k < triplets.size();) {
    const int r = triplets[k].row;
    const int c = triplets[k].col;
    double sum = 0.0;
    for (; k < triplets.size() && triplets[k].row == r && triplets[k].col == c; ++k) sum += triplets[k].value;
    cols_out.push_back(c);
    vals.push_back(sum);
    ++offsets[static_cast<std::size_t>(r) + 1];
  }
  for (int i = 0; i < rows; ++i) offsets[i + 1] += offsets[i];
  return SparseMatrix(rows, cols, std::move(offsets), std::move(cols_out), std::move(vals));
}

SparseMatrix SparseMatrix::identity(int n)
{
  std::vector<int> offsets(static_cast<std::size_t>(n) + 1);
  std::vector<int> cols(static_cast<std::size_t>(n));
  for (int i = 0; i <= n; ++i) offsets[i] = i;
  for (int i = 0; i < n; ++i) cols[i] = i;
  return SparseMatrix(n, n, std::move(offsets), std::move(cols), std::vector<double>(static_cast<std::size_t>(n), 1.0));
}

double SparseMatrix::coeff(int row, int col) const
{
  const auto first = col_indices_.begin() + row_offsets_[row];
  const auto last = col_indices_.begin() + row_offsets_[row + 1];
  const auto it = std::lower_bound(first, last, col);
  if (it == last || *it != col) return 0.0;
  return values_[static_cast<std::size_t>(it - col_indices_.begin())];
}

Vector SparseMatrix::operator*(const Vector& x) const
{
  if (x.size() != cols_) throw std::invalid_argument("SparseMatrix * Vector: size mismatch");
  Vector y(rows_);
  for (int i = 0; i < rows_; ++i) {
    double sum = 0.0;
    for (int k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) sum += values_[k] * x[col_indices_[k]];
    y[i] = sum;
  }
  return y;
}

std::vector<Triplet> SparseMatrix::triplets() const
{
  std::vector<Triplet> out;
  out.reserve(values_.size());
  for (int i = 0; i < rows_; ++i)
    for (int k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) out.push_back({i, col_indices_[k], values_[k]});
  return out;
}

SparseMatrix SparseMatrix::transpose() const
{
  auto t = triplets();
  for (auto& e : t) std::swap(e.row, e.col);
  return from_triplets(cols_, rows_, std::move(t));
}

Vector SparseMatrix::diagonal() const
{
  Vector d(std::min(rows_, cols_));
  for (int i = 0; i < d.size(); ++i) d[i] = coeff(i, i);
  return d;
}

SparseMatrix SparseMatrix::add(const SparseMatrix& other, double alpha) const
{
  if (other.rows_ != rows_ || other.cols_ != cols_) throw std::invalid_argument("SparseMatrix::add: shape mismatch");
  auto t = triplets();
  t.reserve(t.size() + other.values_.size());
  for (auto e : other.triplets()) t.push_back({e.row, e.col, alpha * e.value});
  return from_triplets(rows_, cols_, std::move(t));
}

SparseMatrix SparseMatrix::scaled(double alpha) const
{
  SparseMatrix out = *this;
  for (auto& v : out.values_) v *= alpha;
  return out;
}

Eigen::SparseMatrix<double> SparseMatrix::to_eigen() const
{
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(values_.size());
  for (const auto& e : triplets()) t.emplace_back(e.row, e.col, e.value);
  Eigen::SparseMatrix<double> out(rows_, cols_);
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

Eigen::MatrixXd SparseMatrix::to_dense() const
{
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows_, cols_);
  for (const auto& e : triplets()) out(e.row, e.col) = e.value;
  return out;
}

void write_matrix_market(std::ostream& out, const SparseMatrix& a)
{
  const auto old_precision = out.precision(std::numeric_limits<double>::max_digits10);
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << a.rows() << ' ' << a.cols() << ' ' << a.nnz() << '\n';
  for (const auto& e : a.triplets()) out << e.row + 1 << ' ' << e.col + 1 << ' ' << e.value << '\n';
  out.precision(old_precision);
}

void write_vector_csv(std::ostream& out, const Vector& v)
{
  const auto old_precision = out.precision(std::numeric_limits<double>::max_digits10);
  out << "index,value\n";
  for (int i = 0; i < v.size(); ++i) out << i << ',' << v[i] << '\n';
  out.precision(old_precision);
}

}  // namespace nsfem
