#include "elfit/json_io.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"

namespace elfit {

namespace {

using nlohmann::json;

json parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw IoError(path + ": " + e.what());
  }
}

void write_file(const json& doc, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << doc.dump(1, '\t') << '\n';
  if (!out) throw IoError("short write to " + path);
}

Eigen::MatrixXd read_matrix(const json& rows, int expect_rows, int expect_cols,
                            const std::string& what) {
  if (!rows.is_array() || static_cast<int>(rows.size()) != expect_rows)
    throw IoError(what + ": expected " + std::to_string(expect_rows) +
                  " rows");
  Eigen::MatrixXd m(expect_rows, expect_cols);
  for (int i = 0; i < expect_rows; ++i) {
    const json& row = rows[i];
    if (!row.is_array() || static_cast<int>(row.size()) != expect_cols)
      throw IoError(what + ": row " + std::to_string(i) + " has wrong length");
    for (int j = 0; j < expect_cols; ++j) {
      if (!row[j].is_number())
        throw IoError(what + ": non-numeric entry at (" + std::to_string(i) +
                      "," + std::to_string(j) + ")");
      m(i, j) = row[j].get<double>();
    }
  }
  return m;
}

json matrix_rows(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

void save_cloud(const PointCloud& cloud, const std::string& path) {
  json doc;
  doc["d"] = cloud.d;
  doc["n"] = cloud.n;
  doc["seed"] = cloud.seed;
  doc["points"] = matrix_rows(cloud.points);
  write_file(doc, path);
}

PointCloud load_cloud(const std::string& path) {
  const json doc = parse_file(path);
  for (const char* key : {"d", "n", "seed", "points"})
    if (!doc.contains(key))
      throw IoError(path + ": missing field \"" + key + "\"");
  const int d = doc["d"].get<int>();
  const int n = doc["n"].get<int>();
  const std::uint64_t seed = doc["seed"].get<std::uint64_t>();
  try {
    return PointCloud::from_points(d, n, seed,
                                   read_matrix(doc["points"], n, d, path));
  } catch (const std::invalid_argument& e) {
    throw IoError(path + ": " + e.what());
  }
}

void save_q_matrix(const SymMatrix& q, const std::string& path) {
  json doc;
  doc["d"] = q.order();
  doc["q"] = matrix_rows(q.to_dense());
  write_file(doc, path);
}

SymMatrix load_q_matrix(const std::string& path) {
  const json doc = parse_file(path);
  for (const char* key : {"d", "q"})
    if (!doc.contains(key))
      throw IoError(path + ": missing field \"" + key + "\"");
  const int d = doc["d"].get<int>();
  if (d < 1) throw IoError(path + ": d must be positive");
  const Eigen::MatrixXd dense = read_matrix(doc["q"], d, d, path);
  const double scale = std::max(dense.cwiseAbs().maxCoeff(), 1.0);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < i; ++j)
      if (std::abs(dense(i, j) - dense(j, i)) > 1e-9 * scale)
        throw IoError(path + ": matrix is not symmetric");
  try {
    return SymMatrix::from_dense(dense);
  } catch (const std::invalid_argument& e) {
    throw IoError(path + ": " + e.what());
  }
}

}  // namespace elfit
