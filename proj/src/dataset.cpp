#include "bfda/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "bfda/io.hpp"

namespace bfda {

bool PooledGrid::common_grid() const {
  for (const auto& m : mis)
    if (!m.empty()) return false;
  return true;
}

double round_sig(double x) {
  if (x == 0.0 || !std::isfinite(x)) return x == 0.0 ? 0.0 : x;
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.11e", x);
  return std::strtod(buf, nullptr);
}

namespace {

// Sort key: numeric when the id is an integer, lexicographic otherwise.
bool id_less(const std::string& a, const std::string& b) {
  auto as_int = [](const std::string& s, long long& out) {
    if (s.empty()) return false;
    auto r = std::from_chars(s.data(), s.data() + s.size(), out);
    return r.ec == std::errc() && r.ptr == s.data() + s.size();
  };
  long long ia = 0, ib = 0;
  const bool na = as_int(a, ia), nb = as_int(b, ib);
  if (na && nb) return ia < ib;
  if (na != nb) return na;  // numeric ids before non-numeric
  return a < b;
}

}  // namespace

FunctionalDataset make_dataset(std::vector<Curve> curves) {
  if (curves.empty()) throw data_error("dataset has no curves");
  for (auto& c : curves) {
    if (c.t.size() == 0) throw data_error("empty curve '" + c.id + "'");
    if (c.t.size() != c.y.size())
      throw data_error("curve '" + c.id + "': grid and value lengths differ");
    for (Eigen::Index j = 0; j < c.t.size(); ++j) {
      if (!std::isfinite(c.t[j]) || !std::isfinite(c.y[j]))
        throw data_error("curve '" + c.id + "': non-finite entry");
      c.t[j] = round_sig(c.t[j]);
    }
    for (Eigen::Index j = 0; j + 1 < c.t.size(); ++j) {
      if (c.t[j] == c.t[j + 1])
        throw data_error("curve '" + c.id + "': duplicate grid point " + std::to_string(c.t[j]));
      if (c.t[j] > c.t[j + 1])
        throw data_error("curve '" + c.id + "': grid not increasing");
    }
  }
  std::sort(curves.begin(), curves.end(),
            [](const Curve& a, const Curve& b) { return id_less(a.id, b.id); });
  for (std::size_t i = 0; i + 1 < curves.size(); ++i)
    if (curves[i].id == curves[i + 1].id)
      throw data_error("duplicate curve id '" + curves[i].id + "'");

  FunctionalDataset out;
  out.t_min = curves.front().t.minCoeff();
  out.t_max = curves.front().t.maxCoeff();
  for (const auto& c : curves) {
    out.t_min = std::min(out.t_min, c.t.minCoeff());
    out.t_max = std::max(out.t_max, c.t.maxCoeff());
  }
  out.curves = std::move(curves);

  std::set<double> pool;
  for (const auto& c : out.curves)
    for (Eigen::Index j = 0; j < c.t.size(); ++j) pool.insert(c.t[j]);
  if (pool.size() < 2) throw data_error("pooled grid needs at least 2 distinct points");
  return out;
}

DataFormat format_from_name(const std::string& name) {
  if (name == "csv-long" || name == "csv") return DataFormat::csv_long;
  if (name == "json") return DataFormat::json;
  throw config_error("unknown data format '" + name + "'");
}

namespace {

FunctionalDataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw data_error("'" + path + "': empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "curve_id,t,y")
    throw data_error("'" + path + "': expected header 'curve_id,t,y', got '" + line + "'");

  std::map<std::string, std::vector<std::pair<double, double>>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string id, ts, ys;
    if (!std::getline(ss, id, ',') || !std::getline(ss, ts, ',') || !std::getline(ss, ys))
      throw data_error("'" + path + "' line " + std::to_string(lineno) + ": expected 3 fields");
    try {
      rows[id].emplace_back(std::stod(ts), std::stod(ys));
    } catch (const std::exception&) {
      throw data_error("'" + path + "' line " + std::to_string(lineno) + ": parse failure");
    }
  }
  if (rows.empty()) throw data_error("'" + path + "': no data rows");

  std::vector<Curve> curves;
  for (auto& [id, pts] : rows) {
    std::stable_sort(pts.begin(), pts.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    Curve c;
    c.id = id;
    c.t.resize(static_cast<Eigen::Index>(pts.size()));
    c.y.resize(static_cast<Eigen::Index>(pts.size()));
    for (std::size_t j = 0; j < pts.size(); ++j) {
      c.t[static_cast<Eigen::Index>(j)] = pts[j].first;
      c.y[static_cast<Eigen::Index>(j)] = pts[j].second;
    }
    for (Eigen::Index j = 0; j + 1 < c.t.size(); ++j)
      if (round_sig(c.t[j]) == round_sig(c.t[j + 1]))
        throw data_error("curve '" + id + "': duplicate grid point " + std::to_string(c.t[j]));
    curves.push_back(std::move(c));
  }
  return make_dataset(std::move(curves));
}

FunctionalDataset load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw data_error("'" + path + "': JSON parse failure: " + e.what());
  }
  if (!j.is_array()) throw data_error("'" + path + "': expected a JSON array of curves");
  std::vector<Curve> curves;
  for (const auto& item : j) {
    Curve c;
    try {
      c.id = item.at("id").get<std::string>();
      const auto& t = item.at("t");
      const auto& y = item.at("y");
      c.t.resize(static_cast<Eigen::Index>(t.size()));
      c.y.resize(static_cast<Eigen::Index>(y.size()));
      for (std::size_t k = 0; k < t.size(); ++k) c.t[static_cast<Eigen::Index>(k)] = t[k].get<double>();
      for (std::size_t k = 0; k < y.size(); ++k) c.y[static_cast<Eigen::Index>(k)] = y[k].get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw data_error("'" + path + "': bad curve record: " + e.what());
    }
    curves.push_back(std::move(c));
  }
  return make_dataset(std::move(curves));
}

}  // namespace

FunctionalDataset load_dataset(const std::string& path, DataFormat format) {
  return format == DataFormat::csv_long ? load_csv(path) : load_json(path);
}

void save_dataset(const FunctionalDataset& data, const std::string& path, DataFormat format) {
  if (format == DataFormat::csv_long) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write '" + path + "'");
    out << "curve_id,t,y\n";
    for (const auto& c : data.curves)
      for (Eigen::Index j = 0; j < c.t.size(); ++j)
        out << c.id << ',' << io::format_double(c.t[j]) << ',' << io::format_double(c.y[j]) << '\n';
    return;
  }
  nlohmann::json j = nlohmann::json::array();
  for (const auto& c : data.curves) {
    nlohmann::json item;
    item["id"] = c.id;
    item["t"] = std::vector<double>(c.t.data(), c.t.data() + c.t.size());
    item["y"] = std::vector<double>(c.y.data(), c.y.data() + c.y.size());
    j.push_back(std::move(item));
  }
  std::ofstream out(path);
  if (!out) throw data_error("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

PooledGrid pool_grids(const FunctionalDataset& data) {
  std::set<double> pool;
  for (const auto& c : data.curves)
    for (Eigen::Index j = 0; j < c.t.size(); ++j) pool.insert(c.t[j]);

  PooledGrid grid;
  grid.points.resize(static_cast<Eigen::Index>(pool.size()));
  std::map<double, Eigen::Index> index;
  Eigen::Index k = 0;
  for (double v : pool) {
    grid.points[k] = v;
    index[v] = k++;
  }

  const Eigen::Index p = grid.points.size();
  grid.obs.reserve(data.curves.size());
  grid.mis.reserve(data.curves.size());
  for (const auto& c : data.curves) {
    IndexVec o;
    o.reserve(static_cast<std::size_t>(c.t.size()));
    for (Eigen::Index j = 0; j < c.t.size(); ++j) o.push_back(index.at(c.t[j]));
    std::vector<bool> seen(static_cast<std::size_t>(p), false);
    for (auto idx : o) seen[static_cast<std::size_t>(idx)] = true;
    IndexVec m;
    for (Eigen::Index j = 0; j < p; ++j)
      if (!seen[static_cast<std::size_t>(j)]) m.push_back(j);
    grid.obs.push_back(std::move(o));
    grid.mis.push_back(std::move(m));
  }
  return grid;
}

Matrix to_pooled_matrix(const FunctionalDataset& data, const PooledGrid& grid, double fill) {
  Matrix out = Matrix::Constant(grid.size(), data.n_curves(), fill);
  for (Eigen::Index i = 0; i < data.n_curves(); ++i) {
    const auto& c = data.curves[static_cast<std::size_t>(i)];
    const auto& o = grid.obs[static_cast<std::size_t>(i)];
    for (std::size_t j = 0; j < o.size(); ++j)
      out(o[j], i) = c.y[static_cast<Eigen::Index>(j)];
  }
  return out;
}

}  // namespace bfda
