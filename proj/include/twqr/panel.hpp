#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace twqr {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A G x H array of cells, each holding one response y_gh and one regressor
/// row x_gh of length d. Cells may be missing; each (g, h) appears at most once.
///
/// Raw cluster labels are mapped to dense indices 0..G-1 and 0..H-1 in order
/// of first appearance. The object is immutable after construction.
class PanelArray {
 public:
  /// Build from raw labels, one entry per cell.
  PanelArray(const std::vector<std::string>& g_labels, const std::vector<std::string>& h_labels,
             Vector y, Matrix x, std::vector<std::string> regressor_names = {});

  /// Build from dense indices; labels become the decimal index.
  PanelArray(int G, int H, std::vector<int> g, std::vector<int> h, Vector y, Matrix x,
             std::vector<std::string> regressor_names = {});

  int rows() const { return static_cast<int>(row_labels_.size()); }     // G
  int cols() const { return static_cast<int>(col_labels_.size()); }     // H
  int size() const { return static_cast<int>(y_.size()); }              // n
  int dim() const { return static_cast<int>(x_.cols()); }               // d

  const Vector& y() const { return y_; }
  const Matrix& x() const { return x_; }
  const std::vector<int>& row_index() const { return g_; }
  const std::vector<int>& col_index() const { return h_; }
  const std::vector<std::string>& row_labels() const { return row_labels_; }
  const std::vector<std::string>& col_labels() const { return col_labels_; }
  const std::vector<std::string>& regressor_names() const { return regressor_names_; }

 private:
  void check_invariants();

  std::vector<std::string> row_labels_;
  std::vector<std::string> col_labels_;
  std::vector<int> g_;
  std::vector<int> h_;
  Vector y_;
  Matrix x_;
  std::vector<std::string> regressor_names_;
};

/// Column names used when reading a long-format CSV. Empty x_columns means
/// "every column other than g, h and y, in file order".
struct CsvSchema {
  std::string g = "g";
  std::string h = "h";
  std::string y = "y";
  std::vector<std::string> x_columns;
};

struct ValidationReport {
  int missing_cell_count = 0;
  int duplicate_count = 0;
  int rank_estimate = 0;
  std::vector<std::string> messages;
};

PanelArray load_csv(const std::filesystem::path& path, const CsvSchema& schema = {});
PanelArray parse_csv(std::istream& in, const CsvSchema& schema = {});

/// Writes the panel in the format load_csv reads, with shortest round-trip numerics.
void write_csv(const PanelArray& panel, std::ostream& out, const CsvSchema& schema = {});
void write_csv(const PanelArray& panel, const std::filesystem::path& path, const CsvSchema& schema = {});

ValidationReport validate(const PanelArray& panel);

/// Number of singular values above 1e-10 times the largest one.
int numeric_rank(const Matrix& x);

}  // namespace twqr
