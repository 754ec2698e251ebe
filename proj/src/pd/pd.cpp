#include "hybrid/pd/pd.hpp"

#include <algorithm>

namespace hybrid::pd {

Matrix pd_values(const BatchFn& f, const Matrix& queries, const Matrix& background, const IndexSet& known,
                 int chunk) {
  if (background.rows() < 1) throw DataError("partial dependence needs a non-empty background");
  if (queries.cols() != background.cols()) throw ConfigError("query and background widths differ");
  for (int k : known) {
    if (k < 0 || k >= background.cols()) throw ConfigError("known index out of range for partial dependence");
  }
  const Eigen::Index B = background.rows();
  const Eigen::Index per = std::max<Eigen::Index>(1, chunk / B);
  Matrix out;
  Matrix batch;
  for (Eigen::Index q0 = 0; q0 < queries.rows(); q0 += per) {
    const Eigen::Index nq = std::min(per, queries.rows() - q0);
    batch.resize(nq * B, background.cols());
    for (Eigen::Index q = 0; q < nq; ++q) {
      batch.middleRows(q * B, B) = background;
      for (int k : known) batch.col(k).segment(q * B, B).setConstant(queries(q0 + q, k));
    }
    const Matrix y = f(batch);
    if (y.rows() != batch.rows()) throw ConfigError("model returned the wrong number of rows");
    if (out.size() == 0) out.resize(queries.rows(), y.cols());
    for (Eigen::Index q = 0; q < nq; ++q) {
      for (Eigen::Index c = 0; c < y.cols(); ++c) {
        double s = 0.0;
        for (Eigen::Index b = 0; b < B; ++b) s += y(q * B + b, c);
        out(q0 + q, c) = s / static_cast<double>(B);
      }
    }
  }
  if (queries.rows() == 0) out.resize(0, 0);
  return out;
}

void require_reads(const ResidualModel& model, const IndexSet& known) {
  for (int k : known) {
    if (!model.reads(k)) {
      throw ConfigError("partial dependence is undefined: feature " + std::to_string(k) +
                        " is filtered out of the residual inputs");
    }
  }
}

namespace {

BatchFn wrap(const ResidualModel& model) {
  return [&model](const Matrix& x) {
    Matrix y(x.rows(), 1);
    y.col(0) = model.predict(x);
    return y;
  };
}

}  // namespace

Vector pd_values(const ResidualModel& model, const Matrix& queries, const Matrix& background, const IndexSet& known) {
  require_reads(model, known);
  if (queries.rows() == 0) return Vector();
  return pd_values(wrap(model), queries, background, known).col(0);
}

double pd_estimate(const ResidualModel& model, const Vector& xk_query, const Matrix& background,
                   const IndexSet& known) {
  if (xk_query.size() != static_cast<Eigen::Index>(known.size())) throw ConfigError("query length != |known|");
  if (background.rows() < 1) throw DataError("partial dependence needs a non-empty background");
  Matrix q = background.topRows(1);
  for (std::size_t j = 0; j < known.size(); ++j) q(0, known[j]) = xk_query(static_cast<Eigen::Index>(j));
  return pd_values(model, q, background, known)(0);
}

Dataset pd_dataset(const ResidualModel& model, const Dataset& data) {
  Dataset out;
  out.features = data.features;
  out.targets = pd_values(model, data.features, data.features, data.known);
  out.known = data.known;
  out.split = data.split;
  return out;
}

}  // namespace hybrid::pd
