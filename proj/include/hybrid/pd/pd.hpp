#pragma once

#include <functional>

#include "hybrid/core/residual.hpp"
#include "hybrid/core/types.hpp"

namespace hybrid::pd {

// Batched model evaluation: rows in, one row of outputs per input row out.
using BatchFn = std::function<Matrix(const Matrix&)>;

// For every query row q, the mean over background rows b of f(x) where
// x = b with columns `known` overwritten by q's values. Returns one output
// row per query. `chunk` bounds how many rows are evaluated at once.
Matrix pd_values(const BatchFn& f, const Matrix& queries, const Matrix& background, const IndexSet& known,
                 int chunk = 8192);

// Single-output model, query given directly in x_k coordinates.
double pd_estimate(const ResidualModel& model, const Vector& xk_query, const Matrix& background,
                   const IndexSet& known);

// PD at the x_k part of each query row.
Vector pd_values(const ResidualModel& model, const Matrix& queries, const Matrix& background, const IndexSet& known);

// Proxy dataset: same rows as `data` (the prior reads only data.known),
// targets replaced by the PD of `model` at each row's x_k with `data` itself
// as background.
Dataset pd_dataset(const ResidualModel& model, const Dataset& data);

// Throws ConfigError when the model's input filter hides any known column.
void require_reads(const ResidualModel& model, const IndexSet& known);

}  // namespace hybrid::pd
