#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <string>

namespace seqdr {

// One observed sample of N rows: outcome, two binary treatments, and the
// time-1 / time-2 covariate blocks. s1's first column is the constant 1.
struct Dataset {
  Eigen::VectorXd y;   // outcome at the final stage
  Eigen::VectorXi a1;  // treatment at time 1, each entry 0/1
  Eigen::VectorXi a2;  // treatment at time 2, each entry 0/1
  Eigen::MatrixXd s1;  // N x d1, column 0 identically 1
  Eigen::MatrixXd s2;  // N x d2

  int n() const { return static_cast<int>(y.size()); }
  int d1() const { return static_cast<int>(s1.cols()); }
  int d2() const { return static_cast<int>(s2.cols()); }
  int d() const { return d1() + d2(); }

  // Throws DataError on any invariant violation (shape mismatch, non-binary
  // treatment, non-finite value, missing constant column).
  void validate() const;
};

// Coefficient quadruple eta = (gamma, delta, alpha, beta):
//   gamma (d1)  time-1 propensity,   delta (d) time-2 propensity,
//   alpha (d)   time-2 outcome,      beta (d1) time-1 outcome.
struct NuisanceParams {
  Eigen::VectorXd gamma;
  Eigen::VectorXd delta;
  Eigen::VectorXd alpha;
  Eigen::VectorXd beta;

  // Throws DataError unless dimensions match (d1, d) and entries are finite.
  void validate(int d1, int d) const;
};

// Counterfactual treatment sequence (a1, a2) of interest.
struct TreatmentPath {
  int a1 = 1;
  int a2 = 1;

  bool operator==(const TreatmentPath&) const = default;
};

// Propensity floor used when inverting fitted probabilities.
struct OverlapConfig {
  double c0 = 0.01;             // overlap floor, in (0, 0.5)
  bool clip_propensities = true;

  void validate() const;
};

// Returns a copy with a1' = 1{a1 == path.a1}, a2' = 1{a2 == path.a2}; running
// the (1,1) estimator on the result targets theta_{path.a1, path.a2}.
Dataset relabel_for_path(const Dataset& data, const TreatmentPath& path);

// CSV with header Y,A1,A2,S1_0,...,S1_{d1-1},S2_0,...,S2_{d2-1}. Values are
// written in shortest round-trip decimal form; reading them back is
// bit-exact. Malformed rows are rejected with their line number.
Dataset read_csv(std::istream& in);
Dataset read_csv_file(const std::string& path);
void write_csv(const Dataset& data, std::ostream& out);
void write_csv_file(const Dataset& data, const std::string& path);

// Shortest decimal form of `v` that parses back to the same double.
std::string format_double(double v);

}  // namespace seqdr
