#include "seqdr/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>
#include <vector>

#include "seqdr/errors.hpp"

namespace seqdr {

void Dataset::validate() const {
  const int m = n();
  if (m < 1) throw DataError("dataset must contain at least one row");
  if (a1.size() != m || a2.size() != m || s1.rows() != m || s2.rows() != m)
    throw DataError("dataset fields have inconsistent row counts");
  if (s1.cols() < 1) throw DataError("s1 must have at least the constant column");
  for (int i = 0; i < m; ++i) {
    if (a1[i] != 0 && a1[i] != 1)
      throw DataError("A1 must be 0 or 1 at row " + std::to_string(i));
    if (a2[i] != 0 && a2[i] != 1)
      throw DataError("A2 must be 0 or 1 at row " + std::to_string(i));
    if (s1(i, 0) != 1.0)
      throw DataError("S1_0 must be the constant 1 (row " + std::to_string(i) + ")");
  }
  if (!y.allFinite() || !s1.allFinite() || !s2.allFinite())
    throw DataError("dataset contains non-finite values");
}

void NuisanceParams::validate(int d1, int d) const {
  if (gamma.size() != d1 || beta.size() != d1)
    throw DataError("gamma/beta dimension must equal d1");
  if (delta.size() != d || alpha.size() != d)
    throw DataError("delta/alpha dimension must equal d1+d2");
  if (!gamma.allFinite() || !delta.allFinite() || !alpha.allFinite() ||
      !beta.allFinite())
    throw DataError("nuisance coefficients must be finite");
}

void OverlapConfig::validate() const {
  if (!(c0 > 0.0 && c0 < 0.5))
    throw DataError("overlap floor c0 must lie in (0, 0.5)");
}

Dataset relabel_for_path(const Dataset& data, const TreatmentPath& path) {
  if ((path.a1 != 0 && path.a1 != 1) || (path.a2 != 0 && path.a2 != 1))
    throw DataError("treatment path entries must be 0 or 1");
  Dataset out = data;
  for (int i = 0; i < data.n(); ++i) {
    out.a1[i] = (data.a1[i] == path.a1) ? 1 : 0;
    out.a2[i] = (data.a2[i] == path.a2) ? 1 : 0;
  }
  return out;
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

double parse_double(const std::string& tok, int line_no) {
  double v = 0.0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last)
    throw DataError("malformed numeric value '" + tok + "' at line " +
                    std::to_string(line_no));
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

Dataset read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty CSV input");
  const auto header = split_csv_line(line);
  if (header.size() < 4 || header[0] != "Y" || header[1] != "A1" ||
      header[2] != "A2")
    throw DataError("CSV header must start with Y,A1,A2,S1_0,...");

  int d1 = 0, d2 = 0;
  std::size_t col = 3;
  while (col < header.size() && header[col] == "S1_" + std::to_string(d1)) {
    ++d1;
    ++col;
  }
  while (col < header.size() && header[col] == "S2_" + std::to_string(d2)) {
    ++d2;
    ++col;
  }
  if (col != header.size() || d1 < 1)
    throw DataError("CSV header columns must be S1_0..S1_{d1-1},S2_0..S2_{d2-1}");

  std::vector<std::array<double, 3>> head_vals;
  std::vector<double> covs;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto toks = split_csv_line(line);
    if (toks.size() != header.size())
      throw DataError("row at line " + std::to_string(line_no) + " has " +
                      std::to_string(toks.size()) + " fields, expected " +
                      std::to_string(header.size()));
    std::array<double, 3> h{};
    for (int j = 0; j < 3; ++j) h[j] = parse_double(toks[j], line_no);
    head_vals.push_back(h);
    for (std::size_t j = 3; j < toks.size(); ++j)
      covs.push_back(parse_double(toks[j], line_no));
  }
  const int n = static_cast<int>(head_vals.size());
  if (n == 0) throw DataError("CSV contains a header but no data rows");

  Dataset data;
  data.y.resize(n);
  data.a1.resize(n);
  data.a2.resize(n);
  data.s1.resize(n, d1);
  data.s2.resize(n, d2);
  for (int i = 0; i < n; ++i) {
    data.y[i] = head_vals[i][0];
    const double a1v = head_vals[i][1];
    const double a2v = head_vals[i][2];
    if (a1v != 0.0 && a1v != 1.0)
      throw DataError("A1 must be 0 or 1 at line " + std::to_string(i + 2));
    if (a2v != 0.0 && a2v != 1.0)
      throw DataError("A2 must be 0 or 1 at line " + std::to_string(i + 2));
    data.a1[i] = static_cast<int>(a1v);
    data.a2[i] = static_cast<int>(a2v);
    const double* row = covs.data() + static_cast<std::size_t>(i) * (d1 + d2);
    for (int j = 0; j < d1; ++j) data.s1(i, j) = row[j];
    for (int j = 0; j < d2; ++j) data.s2(i, j) = row[d1 + j];
  }
  data.validate();
  return data;
}

Dataset read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open CSV file: " + path);
  return read_csv(in);
}

void write_csv(const Dataset& data, std::ostream& out) {
  out << "Y,A1,A2";
  for (int j = 0; j < data.d1(); ++j) out << ",S1_" << j;
  for (int j = 0; j < data.d2(); ++j) out << ",S2_" << j;
  out << '\n';
  for (int i = 0; i < data.n(); ++i) {
    out << format_double(data.y[i]) << ',' << data.a1[i] << ',' << data.a2[i];
    for (int j = 0; j < data.d1(); ++j) out << ',' << format_double(data.s1(i, j));
    for (int j = 0; j < data.d2(); ++j) out << ',' << format_double(data.s2(i, j));
    out << '\n';
  }
}

void write_csv_file(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open output file: " + path);
  write_csv(data, out);
}

}  // namespace seqdr
