#include "survmi/csv.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace survmi {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  fields.push_back(field);
  return fields;
}

bool parse_number(const std::string& text, double& out) {
  if (text.empty()) return false;
  errno = 0;
  char* end = nullptr;
  out = std::strtod(text.c_str(), &end);
  return errno == 0 && end == text.c_str() + text.size();
}

ColumnSpec::Kind kind_from_string(const std::string& s) {
  if (s == "time") return ColumnSpec::Kind::Time;
  if (s == "status") return ColumnSpec::Kind::Status;
  if (s == "continuous") return ColumnSpec::Kind::Continuous;
  if (s == "binary") return ColumnSpec::Kind::Binary;
  if (s == "categorical") return ColumnSpec::Kind::Categorical;
  throw ValidationError("unknown column kind '" + s + "'");
}

ColumnKind to_column_kind(ColumnSpec::Kind kind) {
  switch (kind) {
    case ColumnSpec::Kind::Binary:
      return ColumnKind::Binary;
    case ColumnSpec::Kind::Categorical:
      return ColumnKind::Categorical;
    default:
      return ColumnKind::Continuous;
  }
}

// Maps each schema column to its position in the header; every header
// column must be claimed by the schema and vice versa.
std::vector<std::size_t> match_header(
    const std::vector<std::string>& header,
    const std::vector<std::string>& expected, const std::string& path) {
  std::vector<std::size_t> positions;
  positions.reserve(expected.size());
  for (const std::string& name : expected) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw ValidationError("column '" + name + "' missing from " + path);
    positions.push_back(static_cast<std::size_t>(it - header.begin()));
  }
  if (header.size() != expected.size())
    throw ValidationError(path + " has columns not covered by the schema");
  return positions;
}

}  // namespace

std::vector<std::vector<std::string>> read_csv_rows(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() && in.peek() == std::char_traits<char>::eof()) break;
    rows.push_back(split_csv_line(line));
  }
  if (rows.empty()) throw ValidationError(path + " is empty");
  return rows;
}

std::string format_double(double value, int significant_digits) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.*g", significant_digits, value);
  return buffer;
}

void DatasetSchema::validate() const {
  int times = 0;
  int statuses = 0;
  for (const ColumnSpec& col : columns) {
    if (col.name.empty()) throw ValidationError("schema column without a name");
    if (col.kind == ColumnSpec::Kind::Time) ++times;
    if (col.kind == ColumnSpec::Kind::Status) ++statuses;
  }
  if (times != 1 || statuses != 1)
    throw ValidationError("schema needs exactly one time and one status column");
}

std::vector<ColumnSpec> DatasetSchema::predictor_columns() const {
  std::vector<ColumnSpec> out;
  for (const ColumnSpec& col : columns)
    if (col.kind != ColumnSpec::Kind::Time &&
        col.kind != ColumnSpec::Kind::Status)
      out.push_back(col);
  return out;
}

DatasetSchema schema_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open schema file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("schema file " + path + ": " + e.what());
  }
  DatasetSchema schema;
  const std::string global_token = j.value("missing_token", "NA");
  if (!j.contains("columns") || !j["columns"].is_array())
    throw ValidationError("schema file needs a 'columns' array");
  for (const auto& jc : j["columns"]) {
    ColumnSpec col;
    col.name = jc.at("name").get<std::string>();
    col.kind = kind_from_string(jc.at("kind").get<std::string>());
    col.missing_token = jc.value("missing_token", global_token);
    if (jc.contains("levels"))
      col.levels = jc["levels"].get<std::vector<std::string>>();
    schema.columns.push_back(std::move(col));
  }
  schema.validate();
  return schema;
}

DatasetSchema infer_schema(const std::string& path,
                           const std::string& time_col,
                           const std::string& status_col,
                           const std::string& missing_token) {
  const auto rows = read_csv_rows(path);
  const std::vector<std::string>& header = rows[0];
  DatasetSchema schema;
  for (std::size_t c = 0; c < header.size(); ++c) {
    ColumnSpec col;
    col.name = header[c];
    col.missing_token = missing_token;
    if (header[c] == time_col) {
      col.kind = ColumnSpec::Kind::Time;
    } else if (header[c] == status_col) {
      col.kind = ColumnSpec::Kind::Status;
    } else {
      bool numeric = true;
      bool zero_one = true;
      bool any = false;
      for (std::size_t r = 1; r < rows.size(); ++r) {
        if (c >= rows[r].size()) continue;
        const std::string& cell = rows[r][c];
        if (cell.empty() || cell == missing_token) continue;
        any = true;
        double value = 0.0;
        if (!parse_number(cell, value)) {
          numeric = false;
          break;
        }
        if (value != 0.0 && value != 1.0) zero_one = false;
      }
      if (numeric && any)
        col.kind = zero_one ? ColumnSpec::Kind::Binary
                            : ColumnSpec::Kind::Continuous;
      else
        col.kind = ColumnSpec::Kind::Categorical;
    }
    schema.columns.push_back(std::move(col));
  }
  schema.validate();
  return schema;
}

SurvivalDataset load_csv(const std::string& path,
                         const DatasetSchema& schema) {
  schema.validate();
  const auto rows = read_csv_rows(path);
  std::vector<std::string> expected;
  for (const ColumnSpec& col : schema.columns) expected.push_back(col.name);
  const auto positions = match_header(rows[0], expected, path);
  const std::size_t n = rows.size() - 1;
  if (n < 2) throw ValidationError(path + " needs at least 2 data rows");

  const auto predictor_specs = schema.predictor_columns();
  const Eigen::Index p = static_cast<Eigen::Index>(predictor_specs.size());
  if (p < 1) throw ValidationError("schema declares no predictor columns");

  SurvivalDataset data;
  data.time.resize(static_cast<Eigen::Index>(n));
  data.status.resize(static_cast<Eigen::Index>(n));
  data.predictors.setZero(static_cast<Eigen::Index>(n), p);
  data.missing.setZero(static_cast<Eigen::Index>(n), p);
  data.columns.resize(static_cast<std::size_t>(p));

  std::vector<std::vector<std::string>> levels(static_cast<std::size_t>(p));
  for (Eigen::Index j = 0; j < p; ++j)
    levels[static_cast<std::size_t>(j)] =
        predictor_specs[static_cast<std::size_t>(j)].levels;

  std::size_t missing_total = 0;
  for (std::size_t r = 0; r < n; ++r) {
    const auto& row = rows[r + 1];
    if (row.size() != rows[0].size())
      throw ParseError("wrong field count", r + 2, row.size());
    Eigen::Index pj = 0;
    for (std::size_t c = 0; c < schema.columns.size(); ++c) {
      const ColumnSpec& spec = schema.columns[c];
      const std::string& cell = row[positions[c]];
      const bool is_missing = cell.empty() || cell == spec.missing_token;
      const std::size_t disp_row = r + 2;
      const std::size_t disp_col = positions[c] + 1;
      switch (spec.kind) {
        case ColumnSpec::Kind::Time: {
          if (is_missing)
            throw ValidationError("missing follow-up time at row " +
                                  std::to_string(disp_row));
          double value = 0.0;
          if (!parse_number(cell, value))
            throw ParseError("unparseable time '" + cell + "'", disp_row,
                             disp_col);
          if (!(value > 0.0))
            throw ValidationError("follow-up time must be positive (row " +
                                  std::to_string(disp_row) + ")");
          data.time[static_cast<Eigen::Index>(r)] = value;
          break;
        }
        case ColumnSpec::Kind::Status: {
          if (is_missing)
            throw ValidationError("missing status at row " +
                                  std::to_string(disp_row));
          double value = 0.0;
          if (!parse_number(cell, value))
            throw ParseError("unparseable status '" + cell + "'", disp_row,
                             disp_col);
          if (value != 0.0 && value != 1.0)
            throw ValidationError("status must be 0 or 1 (row " +
                                  std::to_string(disp_row) + ")");
          data.status[static_cast<Eigen::Index>(r)] =
              static_cast<int>(value);
          break;
        }
        case ColumnSpec::Kind::Continuous:
        case ColumnSpec::Kind::Binary: {
          if (is_missing) {
            data.missing(static_cast<Eigen::Index>(r), pj) = 1;
            ++missing_total;
          } else {
            double value = 0.0;
            if (!parse_number(cell, value))
              throw ParseError("unparseable number '" + cell + "'", disp_row,
                               disp_col);
            if (spec.kind == ColumnSpec::Kind::Binary && value != 0.0 &&
                value != 1.0)
              throw ValidationError("binary column '" + spec.name +
                                    "' has value '" + cell + "' (row " +
                                    std::to_string(disp_row) + ")");
            data.predictors(static_cast<Eigen::Index>(r), pj) = value;
          }
          ++pj;
          break;
        }
        case ColumnSpec::Kind::Categorical: {
          if (is_missing) {
            data.missing(static_cast<Eigen::Index>(r), pj) = 1;
            ++missing_total;
          } else {
            auto& lv = levels[static_cast<std::size_t>(pj)];
            auto it = std::find(lv.begin(), lv.end(), cell);
            if (it == lv.end()) {
              if (!predictor_specs[static_cast<std::size_t>(pj)]
                       .levels.empty())
                throw ValidationError("categorical column '" + spec.name +
                                      "' has undeclared level '" + cell +
                                      "' (row " + std::to_string(disp_row) +
                                      ")");
              lv.push_back(cell);
              it = std::prev(lv.end());
            }
            data.predictors(static_cast<Eigen::Index>(r), pj) =
                static_cast<double>(it - lv.begin());
          }
          ++pj;
          break;
        }
      }
    }
  }

  for (Eigen::Index j = 0; j < p; ++j) {
    const ColumnSpec& spec = predictor_specs[static_cast<std::size_t>(j)];
    ColumnInfo& info = data.columns[static_cast<std::size_t>(j)];
    info.name = spec.name;
    info.kind = to_column_kind(spec.kind);
    if (info.kind == ColumnKind::Categorical) {
      info.level_names = levels[static_cast<std::size_t>(j)];
      info.levels = static_cast<int>(info.level_names.size());
      if (info.levels < 2)
        throw ValidationError("categorical column '" + spec.name +
                              "' needs at least 2 observed levels");
    }
  }
  data.validate();
  std::string per_column;
  for (Eigen::Index j = 0; j < p; ++j) {
    std::size_t count = 0;
    for (Eigen::Index i = 0; i < data.n(); ++i) count += data.missing(i, j);
    if (count > 0)
      per_column += " " + data.columns[static_cast<std::size_t>(j)].name +
                    "=" + std::to_string(count);
  }
  std::fprintf(stderr, "loaded %s: %zu rows, %zu missing cells%s%s\n",
               path.c_str(), n, missing_total,
               per_column.empty() ? "" : ", per column:",
               per_column.c_str());
  return data;
}

PredictorBlock load_predictor_csv(const std::string& path,
                                  const std::vector<ColumnInfo>& columns,
                                  const std::string& missing_token) {
  const auto rows = read_csv_rows(path);
  std::vector<std::string> expected;
  for (const ColumnInfo& col : columns) expected.push_back(col.name);
  const auto positions = match_header(rows[0], expected, path);
  const std::size_t n = rows.size() - 1;
  const Eigen::Index p = static_cast<Eigen::Index>(columns.size());

  PredictorBlock block;
  block.values.setZero(static_cast<Eigen::Index>(n), p);
  block.missing.setZero(static_cast<Eigen::Index>(n), p);
  for (std::size_t r = 0; r < n; ++r) {
    const auto& row = rows[r + 1];
    if (row.size() != rows[0].size())
      throw ParseError("wrong field count", r + 2, row.size());
    for (Eigen::Index j = 0; j < p; ++j) {
      const ColumnInfo& col = columns[static_cast<std::size_t>(j)];
      const std::string& cell = row[positions[static_cast<std::size_t>(j)]];
      const std::size_t disp_row = r + 2;
      const std::size_t disp_col = positions[static_cast<std::size_t>(j)] + 1;
      if (cell.empty() || cell == missing_token) {
        block.missing(static_cast<Eigen::Index>(r), j) = 1;
        continue;
      }
      if (col.kind == ColumnKind::Categorical && !col.level_names.empty()) {
        const auto it = std::find(col.level_names.begin(),
                                  col.level_names.end(), cell);
        if (it == col.level_names.end())
          throw ValidationError("categorical column '" + col.name +
                                "' has unknown level '" + cell + "' (row " +
                                std::to_string(disp_row) + ")");
        block.values(static_cast<Eigen::Index>(r), j) =
            static_cast<double>(it - col.level_names.begin());
      } else {
        double value = 0.0;
        if (!parse_number(cell, value))
          throw ParseError("unparseable number '" + cell + "'", disp_row,
                           disp_col);
        if (col.kind == ColumnKind::Binary && value != 0.0 && value != 1.0)
          throw ValidationError("binary column '" + col.name +
                                "' has value '" + cell + "' (row " +
                                std::to_string(disp_row) + ")");
        if (col.kind == ColumnKind::Categorical &&
            (value < 0.0 || value >= col.levels))
          throw ValidationError("categorical column '" + col.name +
                                "' has out-of-range level (row " +
                                std::to_string(disp_row) + ")");
        block.values(static_cast<Eigen::Index>(r), j) = value;
      }
    }
  }
  return block;
}

void save_csv(const std::string& path, const SurvivalDataset& data,
              const std::string& missing_token) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "time,status";
  for (const ColumnInfo& col : data.columns) out << ',' << col.name;
  out << '\n';
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    out << format_double(data.time[i]) << ',' << data.status[i];
    for (Eigen::Index j = 0; j < data.p(); ++j) {
      out << ',';
      if (data.missing(i, j)) {
        out << missing_token;
        continue;
      }
      const ColumnInfo& col = data.columns[static_cast<std::size_t>(j)];
      if (col.kind == ColumnKind::Categorical && !col.level_names.empty())
        out << col.level_names[static_cast<std::size_t>(
            static_cast<int>(data.predictors(i, j)))];
      else
        out << format_double(data.predictors(i, j));
    }
    out << '\n';
  }
}

}  // namespace survmi
