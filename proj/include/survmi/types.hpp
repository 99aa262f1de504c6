#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "survmi/errors.hpp"

namespace survmi {

using Mask = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

enum class ColumnKind { Continuous, Binary, Categorical };

struct ColumnInfo {
  std::string name;
  ColumnKind kind = ColumnKind::Continuous;
  int levels = 0;  // categorical only; stored values are level indices
  std::vector<std::string> level_names;  // optional, categorical only
};

// Predictor rows without outcomes: the "new observations" side of an
// augmented matrix, and the payload of `predict` inputs.
struct PredictorBlock {
  Eigen::MatrixXd values;  // m x p; masked cells carry unspecified values
  Mask missing;            // m x p, 1 = absent

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
  bool row_has_missing(Eigen::Index i) const {
    for (Eigen::Index j = 0; j < missing.cols(); ++j)
      if (missing(i, j)) return true;
    return false;
  }
};

// Follow-up times, event indicators and a predictor matrix with an explicit
// missingness mask. Masked cells are ignored by every estimator.
struct SurvivalDataset {
  Eigen::VectorXd time;    // n, strictly positive
  Eigen::VectorXi status;  // n, 1 = event, 0 = censored
  Eigen::MatrixXd predictors;  // n x p
  Mask missing;                // n x p
  std::vector<ColumnInfo> columns;

  Eigen::Index n() const { return time.size(); }
  Eigen::Index p() const { return predictors.cols(); }

  bool row_has_missing(Eigen::Index i) const {
    for (Eigen::Index j = 0; j < missing.cols(); ++j)
      if (missing(i, j)) return true;
    return false;
  }

  bool any_missing() const {
    for (Eigen::Index i = 0; i < missing.rows(); ++i)
      for (Eigen::Index j = 0; j < missing.cols(); ++j)
        if (missing(i, j)) return true;
    return false;
  }

  void validate() const {
    const Eigen::Index rows = time.size();
    if (rows < 2) throw ValidationError("dataset needs at least 2 subjects");
    if (status.size() != rows || predictors.rows() != rows ||
        missing.rows() != rows) {
      throw ShapeError("dataset fields disagree on subject count");
    }
    if (predictors.cols() < 1)
      throw ValidationError("dataset needs at least one predictor column");
    if (missing.cols() != predictors.cols())
      throw ShapeError("missing mask shape does not match predictors");
    if (static_cast<Eigen::Index>(columns.size()) != predictors.cols())
      throw ShapeError("column metadata does not match predictor width");
    for (Eigen::Index i = 0; i < rows; ++i) {
      if (!(time[i] > 0.0))
        throw ValidationError("follow-up time must be positive (subject " +
                              std::to_string(i) + ")");
      if (status[i] != 0 && status[i] != 1)
        throw ValidationError("status must be 0 or 1 (subject " +
                              std::to_string(i) + ")");
    }
    for (Eigen::Index j = 0; j < predictors.cols(); ++j) {
      const ColumnInfo& col = columns[static_cast<std::size_t>(j)];
      if (col.kind == ColumnKind::Categorical && col.levels < 2)
        throw ValidationError("categorical column '" + col.name +
                              "' needs a declared level count >= 2");
    }
  }

  PredictorBlock predictor_block(const std::vector<int>& row_idx) const {
    PredictorBlock b;
    b.values.resize(static_cast<Eigen::Index>(row_idx.size()), p());
    b.missing.resize(static_cast<Eigen::Index>(row_idx.size()), p());
    for (std::size_t r = 0; r < row_idx.size(); ++r) {
      b.values.row(static_cast<Eigen::Index>(r)) = predictors.row(row_idx[r]);
      b.missing.row(static_cast<Eigen::Index>(r)) = missing.row(row_idx[r]);
    }
    return b;
  }

  SurvivalDataset subset(const std::vector<int>& row_idx) const {
    SurvivalDataset d;
    const Eigen::Index m = static_cast<Eigen::Index>(row_idx.size());
    d.time.resize(m);
    d.status.resize(m);
    d.predictors.resize(m, p());
    d.missing.resize(m, p());
    for (Eigen::Index r = 0; r < m; ++r) {
      const int i = row_idx[static_cast<std::size_t>(r)];
      d.time[r] = time[i];
      d.status[r] = status[i];
      d.predictors.row(r) = predictors.row(i);
      d.missing.row(r) = missing.row(i);
    }
    d.columns = columns;
    return d;
  }
};

}  // namespace survmi
