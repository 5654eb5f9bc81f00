#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

#include "steinloss/fields.hpp"

namespace steinloss {

struct LinearModelData {
  Vec y;
  Eigen::MatrixXd design;  // n x p, full column rank
  std::vector<std::string> column_names;

  int n() const { return static_cast<int>(y.size()); }
  int p() const { return static_cast<int>(design.cols()); }
};

// Rotation of y into (x, u): x carries the mean, u is a pure residual vector.
struct CanonicalForm {
  Vec x;                   // dim p
  Vec u;                   // dim n - p
  Eigen::MatrixXd basis;   // the p x n block of the orthogonal factor
};

// Orthogonal factor via column-pivoted QR, signs fixed so the triangular
// factor has a positive diagonal (the rotation itself is non-unique).
CanonicalForm canonical_transform(const LinearModelData& data);

// Residual-based unbiased variance estimate ||u||^2 / (n - p).
double sigma2_unbiased(const LinearModelData& data);

double df_linear(const Eigen::MatrixXd& smoother);
double df_linear(const Vec& hat_diagonal);

// Degrees of freedom as the divergence of the fitted-value map at y.
double df_divergence(const VectorField& fitted_map, const Vec& y);

// C*_p = ||y - fitted||^2/n + (2 div/n) sigma2_hat.
double cp_star(const Vec& y, const Vec& fitted, double div_phi, double sigma2_hat,
               int n);

struct RidgeFit {
  Vec fitted;
  double df = 0.0;      // trace of the smoother
  double lambda = 0.0;
};

// Standard ridge through the design's SVD. A nonnegative `intercept_index`
// marks a constant column left unpenalized (fit on centered data).
RidgeFit ridge_fit(const LinearModelData& data, double lambda,
                   int intercept_index = -1);

struct CpRow {
  double lambda;
  double rss;
  double df;
  double cp_star;
};

struct SelectionResult {
  double chosen_lambda = 0.0;
  std::vector<CpRow> table;

  void write_csv(std::ostream& os) const;
};

// argmin of C*_p over the grid; a constant design column, if present, is
// detected and left unpenalized so the criterion is shift invariant.
SelectionResult select(const LinearModelData& data, const std::vector<double>& lambdas,
                       double sigma2_hat);

// CSV ingestion: header row, one named response column, remaining numeric
// columns form the design. Missing or non-numeric cells are rejected.
LinearModelData read_csv_data(std::istream& is, const std::string& response_column);
LinearModelData read_csv_file(const std::string& path, const std::string& response_column);

}  // namespace steinloss
