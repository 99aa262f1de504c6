#include "survmi/report.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "survmi/csv.hpp"

namespace survmi {

void write_report_csv(const std::string& path,
                      const AssessmentReport& report) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "method,K,horizon,stratum,metric,value\n";
  for (const ReportRow& row : report.rows) {
    out << row.method << ',' << row.K << ',' << format_double(row.horizon, 12)
        << ',' << row.stratum << ',' << row.metric << ','
        << format_double(row.value, 12) << '\n';
  }
}

void write_report_json(const std::string& path,
                       const AssessmentReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const ReportRow& row : report.rows) {
    rows.push_back({{"method", row.method},
                    {"K", row.K},
                    {"horizon", row.horizon},
                    {"stratum", row.stratum},
                    {"metric", row.metric},
                    {"value", row.value}});
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << nlohmann::json{{"rows", rows}}.dump(2) << '\n';
}

void write_combined_predictions_csv(
    const std::string& path,
    const std::vector<const PredictionSet*>& replicates) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "replicate,subject,horizon,had_missing,combined\n";
  for (std::size_t r = 0; r < replicates.size(); ++r) {
    const PredictionSet& ps = *replicates[r];
    for (Eigen::Index i = 0; i < ps.n(); ++i)
      for (std::size_t h = 0; h < ps.horizons.size(); ++h)
        out << r << ',' << i << ',' << format_double(ps.horizons[h], 12) << ','
            << static_cast<int>(ps.had_missing[static_cast<std::size_t>(i)])
            << ','
            << format_double(ps.combined(i, static_cast<Eigen::Index>(h)))
            << '\n';
  }
}

void write_prediction_matrix_csv(const std::string& path,
                                 const PredictionSet& ps) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "subject,horizon,imputation,value\n";
  for (Eigen::Index i = 0; i < ps.n(); ++i)
    for (std::size_t h = 0; h < ps.horizons.size(); ++h)
      for (int k = 0; k < ps.K(); ++k)
        out << i << ',' << format_double(ps.horizons[h], 12) << ',' << k << ','
            << format_double(ps.per_imputation[h](i, k)) << '\n';
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t hash = 0xCBF29CE484222325ull;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001B3ull;
  }
  char buffer[17];
  std::snprintf(buffer, sizeof(buffer), "%016llx",
                static_cast<unsigned long long>(hash));
  return buffer;
}

std::string file_fnv1a_hex(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return fnv1a_hex(ss.str());
}

}  // namespace survmi
