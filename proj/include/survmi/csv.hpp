#pragma once

#include <string>
#include <vector>

#include "survmi/types.hpp"

namespace survmi {

struct ColumnSpec {
  enum class Kind { Time, Status, Continuous, Binary, Categorical };
  std::string name;
  Kind kind = Kind::Continuous;
  std::vector<std::string> levels;  // categorical; empty = discover from file
  std::string missing_token = "NA";
};

struct DatasetSchema {
  std::vector<ColumnSpec> columns;  // exactly one Time and one Status

  void validate() const;
  std::vector<ColumnSpec> predictor_columns() const;
};

// Schema from a JSON file: {"missing_token": "NA", "columns": [{"name":
// ..., "kind": "time|status|continuous|binary|categorical", "levels":
// [...]}, ...]}.
DatasetSchema schema_from_json_file(const std::string& path);

// Infers a schema from the file itself: columns named like time_col /
// status_col take those roles, numeric columns whose observed values are
// all 0/1 become binary, other numeric columns continuous, and anything
// else categorical with levels in first-appearance order.
DatasetSchema infer_schema(const std::string& path,
                           const std::string& time_col,
                           const std::string& status_col,
                           const std::string& missing_token);

// Loads a survival dataset. Missing tokens (and empty cells) set the mask;
// categorical cells become level indices. The returned columns carry the
// resolved level names so later files encode identically.
SurvivalDataset load_csv(const std::string& path, const DatasetSchema& schema);

// Loads predictor-only rows against an already resolved column set.
PredictorBlock load_predictor_csv(const std::string& path,
                                  const std::vector<ColumnInfo>& columns,
                                  const std::string& missing_token);

// Writes time, status and predictors; masked cells become the token and
// numeric cells round-trip exactly.
void save_csv(const std::string& path, const SurvivalDataset& data,
              const std::string& missing_token = "NA");

// Raw CSV plumbing shared with the report writers.
std::vector<std::vector<std::string>> read_csv_rows(const std::string& path);
std::string format_double(double value, int significant_digits = 17);

}  // namespace survmi
