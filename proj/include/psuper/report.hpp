#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "psuper/error.hpp"

namespace psuper {

/// Tabulated outcome of one experiment: parameters, one row per level, fitted slopes, pass flags.
struct ExperimentReport {
  std::string name;
  nlohmann::json parameters = nlohmann::json::object();
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::map<std::string, double> slopes;
  std::map<std::string, double> values;
  std::map<std::string, bool> checks;
  std::vector<std::string> notes;

  bool passed() const {
    for (const auto& [k, v] : checks) {
      if (!v) return false;
    }
    return true;
  }

  void add_row(std::vector<double> row) {
    if (row.size() != columns.size()) throw InvalidArgument("ExperimentReport: row width does not match columns");
    rows.push_back(std::move(row));
  }

  std::vector<double> column(const std::string& c) const {
    for (std::size_t j = 0; j < columns.size(); ++j) {
      if (columns[j] == c) {
        std::vector<double> out;
        for (const auto& r : rows) out.push_back(r[j]);
        return out;
      }
    }
    throw InvalidArgument("ExperimentReport: no column '" + c + "'");
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["name"] = name;
    j["parameters"] = parameters;
    j["columns"] = columns;
    j["rows"] = nlohmann::json::array();
    for (const auto& r : rows) {
      nlohmann::json row = nlohmann::json::array();
      for (double v : r) {
        if (std::isfinite(v)) {
          row.push_back(v);
        } else {
          row.push_back(nullptr);
        }
      }
      j["rows"].push_back(row);
    }
    j["slopes"] = slopes;
    j["values"] = nlohmann::json::object();
    for (const auto& [k, v] : values) {
      if (std::isfinite(v)) {
        j["values"][k] = v;
      } else {
        j["values"][k] = nullptr;
      }
    }
    j["checks"] = checks;
    j["notes"] = notes;
    j["passed"] = passed();
    return j;
  }

  /// Comma-separated table with header row, full-precision floats.
  std::string to_csv() const {
    std::ostringstream os;
    for (std::size_t j = 0; j < columns.size(); ++j) os << (j ? "," : "") << columns[j];
    os << '\n';
    char buf[64];
    for (const auto& r : rows) {
      for (std::size_t j = 0; j < r.size(); ++j) {
        std::snprintf(buf, sizeof buf, "%.17g", r[j]);
        os << (j ? "," : "") << buf;
      }
      os << '\n';
    }
    return os.str();
  }
};

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

/// Writes {stem}.csv and {stem}.json where stem = {experiment}-{n}-{p}-{timestamp}. Returns the stem.
inline std::string write_report(const std::filesystem::path& dir, const ExperimentReport& r, int n, double p,
                                const std::string& timestamp = utc_timestamp()) {
  std::filesystem::create_directories(dir);
  char pbuf[32];
  std::snprintf(pbuf, sizeof pbuf, "%g", p);
  const std::string stem = r.name + "-" + std::to_string(n) + "-" + pbuf + "-" + timestamp;
  std::ofstream(dir / (stem + ".csv")) << r.to_csv();
  std::ofstream(dir / (stem + ".json")) << r.to_json().dump(2) << '\n';
  return stem;
}

/// Least-squares slope of y against x.
inline double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DegenerateFit("fit_slope: need at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / n;
    my += y[i] / n;
  }
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx <= 0.0) throw DegenerateFit("fit_slope: abscissae coincide");
  return sxy / sxx;
}

}  // namespace psuper
