#include "steinloss/model_selection.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "steinloss/csv.hpp"

namespace steinloss {

namespace {

void check_shape(const LinearModelData& data) {
  const int n = data.n(), p = data.p();
  if (p < 1) throw ConfigError("design needs at least one column");
  if (n <= p) throw ConfigError("need more rows than columns (n > p)");
  if (data.design.rows() != n) throw ConfigError("design/response row mismatch");
}

}  // namespace

CanonicalForm canonical_transform(const LinearModelData& data) {
  check_shape(data);
  const int n = data.n(), p = data.p();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(data.design);
  if (qr.rank() < p) throw RankDeficient("design matrix is rank deficient");

  Eigen::MatrixXd Q = qr.householderQ();
  const Eigen::MatrixXd R =
      qr.matrixQR().topRows(p).triangularView<Eigen::Upper>();
  // Fix the sign convention: positive diagonal in the triangular factor.
  for (int j = 0; j < p; ++j)
    if (R(j, j) < 0.0) Q.col(j) = -Q.col(j);

  CanonicalForm cf;
  cf.basis = Q.leftCols(p).transpose();
  cf.x = cf.basis * data.y;
  cf.u = Q.rightCols(n - p).transpose() * data.y;
  return cf;
}

double sigma2_unbiased(const LinearModelData& data) {
  check_shape(data);
  const CanonicalForm cf = canonical_transform(data);
  return cf.u.squaredNorm() / static_cast<double>(data.n() - data.p());
}

double df_linear(const Eigen::MatrixXd& smoother) {
  if (smoother.rows() != smoother.cols())
    throw ConfigError("smoother matrix must be square");
  return smoother.trace();
}

double df_linear(const Vec& hat_diagonal) { return hat_diagonal.sum(); }

double df_divergence(const VectorField& fitted_map, const Vec& y) {
  return divergence_fd(fitted_map, y);
}

double cp_star(const Vec& y, const Vec& fitted, double div_phi, double sigma2_hat,
               int n) {
  if (sigma2_hat <= 0.0) throw DomainError("cp_star needs sigma2_hat > 0");
  if (n < 1 || y.size() != fitted.size()) throw ConfigError("cp_star shape mismatch");
  return (y - fitted).squaredNorm() / n + 2.0 * div_phi / n * sigma2_hat;
}

RidgeFit ridge_fit(const LinearModelData& data, double lambda, int intercept_index) {
  check_shape(data);
  if (lambda < 0.0) throw InvalidPenalty("ridge penalty must be nonnegative");
  const int n = data.n(), p = data.p();

  RidgeFit fit;
  fit.lambda = lambda;

  if (intercept_index < 0) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(data.design,
                                       Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vec d = svd.singularValues();
    if (d(p - 1) <= 1e-10 * d(0)) throw RankDeficient("design matrix is rank deficient");
    Vec shrink(p);
    for (int j = 0; j < p; ++j)
      shrink[j] = d[j] * d[j] / (d[j] * d[j] + lambda);
    const Vec uty = svd.matrixU().transpose() * data.y;
    fit.fitted = svd.matrixU() * shrink.cwiseProduct(uty).matrix();
    fit.df = shrink.sum();
    return fit;
  }

  // Unpenalized intercept: center y and the remaining columns, shrink the
  // centered block, put the mean back.
  if (intercept_index >= p) throw ConfigError("intercept index out of range");
  Eigen::MatrixXd Z(n, p - 1);
  for (int j = 0, c = 0; j < p; ++j)
    if (j != intercept_index) Z.col(c++) = data.design.col(j);
  const Vec ones = Vec::Ones(n);
  const double ybar = data.y.mean();
  const Vec yc = data.y.array() - ybar;
  Eigen::MatrixXd Zc = Z.rowwise() - Z.colwise().mean();

  Eigen::BDCSVD<Eigen::MatrixXd> svd(Zc, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec d = svd.singularValues();
  if (d(p - 2) <= 1e-10 * d(0))
    throw RankDeficient("centered design block is rank deficient");
  Vec shrink(p - 1);
  for (int j = 0; j < p - 1; ++j)
    shrink[j] = d[j] * d[j] / (d[j] * d[j] + lambda);
  const Vec uty = svd.matrixU().transpose() * yc;
  fit.fitted = ybar * ones + svd.matrixU() * shrink.cwiseProduct(uty).matrix();
  fit.df = 1.0 + shrink.sum();
  return fit;
}

void SelectionResult::write_csv(std::ostream& os) const {
  os << "lambda,rss,df,cp_star\n";
  for (const auto& r : table) {
    os << csv_double(r.lambda) << ',' << csv_double(r.rss) << ','
       << csv_double(r.df) << ',' << csv_double(r.cp_star) << '\n';
  }
}

SelectionResult select(const LinearModelData& data, const std::vector<double>& lambdas,
                       double sigma2_hat) {
  check_shape(data);
  if (lambdas.empty()) throw ConfigError("lambda grid is empty");

  int intercept = -1;
  for (int j = 0; j < data.p(); ++j) {
    const Vec col = data.design.col(j);
    if ((col.array() - col[0]).abs().maxCoeff() == 0.0 && col[0] != 0.0) {
      intercept = j;
      break;
    }
  }

  SelectionResult res;
  double best = std::numeric_limits<double>::infinity();
  for (double lambda : lambdas) {
    const RidgeFit fit = ridge_fit(data, lambda, intercept);
    CpRow row;
    row.lambda = lambda;
    row.rss = (data.y - fit.fitted).squaredNorm();
    row.df = fit.df;
    row.cp_star = cp_star(data.y, fit.fitted, fit.df, sigma2_hat, data.n());
    res.table.push_back(row);
    if (row.cp_star < best) {
      best = row.cp_star;
      res.chosen_lambda = lambda;
    }
  }
  return res;
}

LinearModelData read_csv_data(std::istream& is, const std::string& response_column) {
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("empty data file");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  std::vector<std::string> headers;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) headers.push_back(cell);
  }
  int response = -1;
  for (std::size_t j = 0; j < headers.size(); ++j)
    if (headers[j] == response_column) response = static_cast<int>(j);
  if (response < 0)
    throw ConfigError("response column '" + response_column + "' not found");
  if (headers.size() < 2) throw ConfigError("data needs at least one design column");

  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) {
      if (cell.empty())
        throw ConfigError("missing value at line " + std::to_string(line_no));
      std::size_t used = 0;
      double v;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        throw ConfigError("non-numeric cell '" + cell + "' at line " +
                          std::to_string(line_no));
      }
      if (used != cell.size())
        throw ConfigError("non-numeric cell '" + cell + "' at line " +
                          std::to_string(line_no));
      row.push_back(v);
    }
    if (row.size() != headers.size())
      throw ConfigError("ragged row at line " + std::to_string(line_no));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ConfigError("data file has no rows");

  LinearModelData data;
  const int n = static_cast<int>(rows.size());
  const int p = static_cast<int>(headers.size()) - 1;
  data.y.resize(n);
  data.design.resize(n, p);
  for (std::size_t j = 0; j < headers.size(); ++j)
    if (static_cast<int>(j) != response) data.column_names.push_back(headers[j]);
  for (int i = 0; i < n; ++i) {
    data.y[i] = rows[i][response];
    for (int j = 0, c = 0; j <= p; ++j)
      if (j != response) data.design(i, c++) = rows[i][j];
  }
  return data;
}

LinearModelData read_csv_file(const std::string& path,
                              const std::string& response_column) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open data file '" + path + "'");
  return read_csv_data(f, response_column);
}

}  // namespace steinloss
