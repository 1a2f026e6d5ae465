#include "twqr/panel.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "twqr/error.hpp"

namespace twqr {

namespace {

std::vector<std::string> decimal_labels(int count) {
  std::vector<std::string> labels(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) labels[static_cast<std::size_t>(i)] = std::to_string(i);
  return labels;
}

std::vector<int> densify(const std::vector<std::string>& raw, std::vector<std::string>& labels) {
  std::unordered_map<std::string, int> index;
  std::vector<int> dense;
  dense.reserve(raw.size());
  for (const auto& label : raw) {
    auto [it, inserted] = index.try_emplace(label, static_cast<int>(labels.size()));
    if (inserted) labels.push_back(label);
    dense.push_back(it->second);
  }
  return dense;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Comma-separated fields; a field may be wrapped in double quotes, with "" as
// an escaped quote. Quoted fields do not span lines.
std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back(trim(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  fields.emplace_back(trim(current));
  return fields;
}

bool parse_finite(std::string_view text, double& value) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return false;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  return ec == std::errc() && end == text.data() + text.size() && std::isfinite(value);
}

std::string quote_if_needed(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string quoted = "\"";
  for (char c : field) {
    if (c == '"') quoted.push_back('"');
    quoted.push_back(c);
  }
  quoted.push_back('"');
  return quoted;
}

std::string shortest(double value) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, end);
}

}  // namespace

PanelArray::PanelArray(const std::vector<std::string>& g_labels, const std::vector<std::string>& h_labels,
                       Vector y, Matrix x, std::vector<std::string> regressor_names)
    : y_(std::move(y)), x_(std::move(x)), regressor_names_(std::move(regressor_names)) {
  if (g_labels.size() != h_labels.size() || g_labels.size() != static_cast<std::size_t>(y_.size())) {
    throw Error(ErrorCode::DimensionMismatch, "label and response lengths differ");
  }
  g_ = densify(g_labels, row_labels_);
  h_ = densify(h_labels, col_labels_);
  check_invariants();
}

PanelArray::PanelArray(int G, int H, std::vector<int> g, std::vector<int> h, Vector y, Matrix x,
                       std::vector<std::string> regressor_names)
    : row_labels_(decimal_labels(G)),
      col_labels_(decimal_labels(H)),
      g_(std::move(g)),
      h_(std::move(h)),
      y_(std::move(y)),
      x_(std::move(x)),
      regressor_names_(std::move(regressor_names)) {
  for (std::size_t i = 0; i < g_.size(); ++i) {
    if (i >= h_.size() || g_[i] < 0 || g_[i] >= G || h_[i] < 0 || h_[i] >= H) {
      throw Error(ErrorCode::DimensionMismatch, "cell index outside the G x H grid");
    }
  }
  if (g_.size() != h_.size() || g_.size() != static_cast<std::size_t>(y_.size())) {
    throw Error(ErrorCode::DimensionMismatch, "index and response lengths differ");
  }
  check_invariants();
}

void PanelArray::check_invariants() {
  if (x_.rows() != y_.size()) throw Error(ErrorCode::DimensionMismatch, "x rows differ from y length");
  if (y_.size() == 0) throw Error(ErrorCode::EmptyFile, "panel has no cells");
  if (x_.cols() == 0) throw Error(ErrorCode::DimensionMismatch, "panel has no regressors");
  if (!y_.allFinite() || !x_.allFinite()) throw Error(ErrorCode::NonFinite, "non-finite response or regressor");
  if (regressor_names_.empty()) {
    for (Eigen::Index j = 0; j < x_.cols(); ++j) regressor_names_.push_back("x" + std::to_string(j + 1));
  } else if (regressor_names_.size() != static_cast<std::size_t>(x_.cols())) {
    throw Error(ErrorCode::DimensionMismatch, "regressor name count differs from d");
  }

  const auto H = static_cast<long long>(col_labels_.size());
  std::unordered_set<long long> seen;
  seen.reserve(g_.size());
  for (std::size_t i = 0; i < g_.size(); ++i) {
    if (!seen.insert(g_[i] * H + h_[i]).second) {
      throw Error(ErrorCode::DuplicateCell,
                  "(" + row_labels_[static_cast<std::size_t>(g_[i])] + "," +
                      col_labels_[static_cast<std::size_t>(h_[i])] + ") appears more than once");
    }
  }
}

PanelArray parse_csv(std::istream& in, const CsvSchema& schema) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::EmptyFile, "no header row");
  if (line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
  const auto header = split_csv_line(line);

  auto column_of = [&](const std::string& name) -> std::size_t {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (header[c] == name) return c;
    }
    throw Error(ErrorCode::MissingColumn, "column '" + name + "' not in header");
  };
  const std::size_t g_col = column_of(schema.g);
  const std::size_t h_col = column_of(schema.h);
  const std::size_t y_col = column_of(schema.y);

  std::vector<std::string> x_names = schema.x_columns;
  if (x_names.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c != g_col && c != h_col && c != y_col) x_names.push_back(header[c]);
    }
  }
  if (x_names.empty()) throw Error(ErrorCode::MissingColumn, "no regressor columns");
  std::vector<std::size_t> x_cols;
  for (const auto& name : x_names) x_cols.push_back(column_of(name));

  std::vector<std::string> g_raw, h_raw;
  std::vector<double> y_raw, x_raw;
  int line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw Error(ErrorCode::ParseFailure, "line " + std::to_string(line_number) + ": expected " +
                                               std::to_string(header.size()) + " fields, found " +
                                               std::to_string(fields.size()));
    }
    auto number = [&](std::size_t c) {
      double v = 0.0;
      if (!parse_finite(fields[c], v)) {
        throw Error(ErrorCode::ParseFailure, "line " + std::to_string(line_number) + ", column '" + header[c] +
                                                 "': '" + fields[c] + "' is not a finite number");
      }
      return v;
    };
    g_raw.push_back(fields[g_col]);
    h_raw.push_back(fields[h_col]);
    y_raw.push_back(number(y_col));
    for (std::size_t c : x_cols) x_raw.push_back(number(c));
  }
  if (y_raw.empty()) throw Error(ErrorCode::EmptyFile, "no data rows");

  const auto n = static_cast<Eigen::Index>(y_raw.size());
  const auto d = static_cast<Eigen::Index>(x_cols.size());
  Vector y = Eigen::Map<const Vector>(y_raw.data(), n);
  Matrix x = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      x_raw.data(), n, d);
  return PanelArray(g_raw, h_raw, std::move(y), std::move(x), std::move(x_names));
}

PanelArray load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
  return parse_csv(in, schema);
}

void write_csv(const PanelArray& panel, std::ostream& out, const CsvSchema& schema) {
  out << quote_if_needed(schema.g) << ',' << quote_if_needed(schema.h) << ',' << quote_if_needed(schema.y);
  for (const auto& name : panel.regressor_names()) out << ',' << quote_if_needed(name);
  out << '\n';
  for (int i = 0; i < panel.size(); ++i) {
    const auto cell = static_cast<std::size_t>(i);
    out << quote_if_needed(panel.row_labels()[static_cast<std::size_t>(panel.row_index()[cell])]) << ','
        << quote_if_needed(panel.col_labels()[static_cast<std::size_t>(panel.col_index()[cell])]) << ','
        << shortest(panel.y()(i));
    for (int j = 0; j < panel.dim(); ++j) out << ',' << shortest(panel.x()(i, j));
    out << '\n';
  }
}

void write_csv(const PanelArray& panel, const std::filesystem::path& path, const CsvSchema& schema) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
  write_csv(panel, out, schema);
}

int numeric_rank(const Matrix& x) {
  if (x.size() == 0) return 0;
  const Vector sv = Eigen::BDCSVD<Matrix>(x).singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  const double cutoff = 1e-10 * sv(0);
  return static_cast<int>((sv.array() > cutoff).count());
}

ValidationReport validate(const PanelArray& panel) {
  ValidationReport report;
  const long long grid = static_cast<long long>(panel.rows()) * panel.cols();
  report.missing_cell_count = static_cast<int>(grid - panel.size());
  report.rank_estimate = numeric_rank(panel.x());
  if (report.missing_cell_count > 0) {
    report.messages.push_back(std::to_string(report.missing_cell_count) + " of " + std::to_string(grid) +
                              " cells missing");
  }
  if (report.rank_estimate < panel.dim()) {
    report.messages.push_back("design rank " + std::to_string(report.rank_estimate) + " below d = " +
                              std::to_string(panel.dim()));
  }
  if (panel.size() <= panel.dim()) report.messages.push_back("n does not exceed d");
  if (panel.rows() < 2 || panel.cols() < 2) {
    report.messages.push_back("two-way variance estimation needs G >= 2 and H >= 2");
  }
  return report;
}

}  // namespace twqr
