#ifndef NSFEM_SPARSE_HPP
#define NSFEM_SPARSE_HPP

#include <iosfwd>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace nsfem {

using Vector = Eigen::VectorXd;

struct Triplet {
  int row;
  int col;
  double value;
};

/// Compressed-row sparse matrix. Column indices are sorted and unique within
/// each row; explicitly stored zeros are allowed.
class SparseMatrix {
public:
  SparseMatrix() = default;
  SparseMatrix(int rows, int cols, std::vector<int> row_offsets, std::vector<int> col_indices,
               std::vector<double> values);

  /// Duplicates are summed.
  static SparseMatrix from_triplets(int rows, int cols, std::vector<Triplet> triplets);
  static SparseMatrix identity(int n);

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  int nnz() const noexcept { return static_cast<int>(values_.size()); }
  const std::vector<int>& row_offsets() const noexcept { return row_offsets_; }
  const std::vector<int>& col_indices() const noexcept { return col_indices_; }
  const std::vector<double>& values() const noexcept { return values_; }

  /// Entry lookup, zero when not stored.
  double coeff(int row, int col) const;

  Vector operator*(const Vector& x) const;
  SparseMatrix transpose() const;
  Vector diagonal() const;
  /// this + alpha * other
  SparseMatrix add(const SparseMatrix& other, double alpha = 1.0) const;
  SparseMatrix scaled(double alpha) const;

  std::vector<Triplet> triplets() const;
  Eigen::SparseMatrix<double> to_eigen() const;
  Eigen::MatrixXd to_dense() const;

private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<int> row_offsets_{0};
  std::vector<int> col_indices_;
  std::vector<double> values_;
};

void write_matrix_market(std::ostream& out, const SparseMatrix& a);
void write_vector_csv(std::ostream& out, const Vector& v);

}  // namespace nsfem

#endif  // NSFEM_SPARSE_HPP
