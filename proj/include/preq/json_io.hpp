#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "preq/dynamics.hpp"
#include "preq/errors.hpp"
#include "preq/matrix.hpp"
#include "preq/operators.hpp"
#include "preq/superop.hpp"

namespace preq {

using Json = nlohmann::json;

/// 17 significant digits: enough to round-trip a double exactly.
inline std::string format_float(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

/// Row-major nested arrays with [re, im] leaves.
inline Json matrix_to_json(const ComplexMatrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      row.push_back(Json::array({m(i, j).real(), m(i, j).imag()}));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline ComplexMatrix matrix_from_json(const Json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw ConfigError(what + ": expected a non-empty array of rows");
  const std::size_t rows = j.size();
  std::size_t cols = 0;
  ComplexMatrix m;
  for (std::size_t i = 0; i < rows; ++i) {
    const Json& row = j[i];
    if (!row.is_array() || row.empty())
      throw ConfigError(what + ": row " + std::to_string(i) + " is not a non-empty array");
    if (i == 0) {
      cols = row.size();
      m.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    } else if (row.size() != cols) {
      throw ConfigError(what + ": ragged rows");
    }
    for (std::size_t k = 0; k < cols; ++k) {
      const Json& entry = row[k];
      if (!entry.is_array() || entry.size() != 2 || !entry[0].is_number() || !entry[1].is_number())
        throw ConfigError(what + ": entry (" + std::to_string(i) + ", " + std::to_string(k) +
                          ") must be [re, im]");
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          Complex(entry[0].get<double>(), entry[1].get<double>());
    }
  }
  if (!all_finite(m)) throw ConfigError(what + ": non-finite entry");
  return m;
}

inline std::string entry_label(const char* part, Eigen::Index i, Eigen::Index j) {
  return std::string(part) + "_" + std::to_string(i) + "_" + std::to_string(j);
}

/// CSV with one row per grid point: t, re/im of each entry (row-major),
/// trace, min_eigenvalue.
inline std::string trajectory_csv(const OperatorTrajectory& traj) {
  const Eigen::Index n = traj.values().front().rows();
  std::string out = "t";
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      out += "," + entry_label("re", i, j) + "," + entry_label("im", i, j);
  out += ",trace,min_eigenvalue\n";
  for (Eigen::Index k = 0; k < traj.grid().points(); ++k) {
    const ComplexMatrix& m = traj.at(k);
    out += format_float(traj.grid().time(k));
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        out += "," + format_float(m(i, j).real());
        out += "," + format_float(m(i, j).imag());
      }
    out += "," + format_float(m.trace().real());
    out += "," + format_float(min_eigenvalue(m));
    out += "\n";
  }
  return out;
}

inline Json trajectory_json(const OperatorTrajectory& traj) {
  Json out;
  out["kind"] = traj.kind() == TrajectoryKind::covariance ? "covariance" : "density";
  Json t = Json::array(), values = Json::array(), trace = Json::array(), lo = Json::array();
  for (Eigen::Index k = 0; k < traj.grid().points(); ++k) {
    t.push_back(traj.grid().time(k));
    values.push_back(matrix_to_json(traj.at(k)));
    trace.push_back(traj.at(k).trace().real());
    lo.push_back(min_eigenvalue(traj.at(k)));
  }
  out["t"] = std::move(t);
  out["values"] = std::move(values);
  out["trace"] = std::move(trace);
  out["min_eigenvalue"] = std::move(lo);
  Json warns = Json::array();
  for (const PositivityWarning& w : traj.warnings())
    warns.push_back(Json{{"t", w.t}, {"min_eigenvalue", w.min_eigenvalue}});
  out["positivity_warnings"] = std::move(warns);
  return out;
}

/// Summary table for path ensembles: t, covariance entries, trace.
inline std::string covariance_table_csv(const std::vector<double>& times,
                                        const std::vector<ComplexMatrix>& covariances) {
  if (times.size() != covariances.size() || times.empty())
    throw Error("covariance_table_csv: times and covariances must align");
  const Eigen::Index n = covariances.front().rows();
  std::string out = "t";
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      out += "," + entry_label("re", i, j) + "," + entry_label("im", i, j);
  out += ",trace\n";
  for (std::size_t k = 0; k < times.size(); ++k) {
    const ComplexMatrix& m = covariances[k];
    out += format_float(times[k]);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        out += "," + format_float(m(i, j).real());
        out += "," + format_float(m(i, j).imag());
      }
    out += "," + format_float(m.trace().real());
    out += "\n";
  }
  return out;
}

inline Json coefficient_tensor_json(const CoefficientTensor& tensor) {
  const Eigen::Index n = tensor.dim().value();
  Json entries = Json::array();
  for (Eigen::Index k = 0; k < n; ++k) {
    Json jk = Json::array();
    for (Eigen::Index m = 0; m < n; ++m) {
      Json jm = Json::array();
      for (Eigen::Index i = 0; i < n; ++i) {
        Json ji = Json::array();
        for (Eigen::Index j = 0; j < n; ++j) {
          const Complex c = tensor.at(k, m, i, j);
          ji.push_back(Json::array({c.real(), c.imag()}));
        }
        jm.push_back(std::move(ji));
      }
      jk.push_back(std::move(jm));
    }
    entries.push_back(std::move(jk));
  }
  return Json{{"n", n}, {"index_order", "k,m,i,j"}, {"entries", std::move(entries)}};
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path + " for writing");
  f << content;
  if (!f) throw Error("failed while writing " + path);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path);
  std::string content((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return content;
}

}  // namespace preq
