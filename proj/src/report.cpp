#include "nsfem/report.hpp"

#include <algorithm>
#include <limits>
#include <ostream>
#include <set>
#include <stdexcept>

namespace nsfem {

void ConvergenceReport::finalize()
{
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.h > b.h; });
  rates.clear();
  if (rows.size() < 3) return;
  std::set<std::string> kinds;
  for (const auto& row : rows)
    for (const auto& [kind, value] : row.errors) kinds.insert(kind);
  const auto hs = mesh_sizes();
  for (const auto& kind : kinds) {
    const auto errs = column(kind);
    if (std::all_of(errs.begin(), errs.end(), [](double e) { return e > 0.0; })) rates[kind] = fit_rate(hs, errs);
  }
}

bool ConvergenceReport::all_converged() const
{
  return std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.converged; });
}

bool ConvergenceReport::strictly_decreasing(const std::string& kind) const
{
  const auto errs = column(kind);
  for (std::size_t i = 1; i < errs.size(); ++i)
    if (!(errs[i] < errs[i - 1])) return false;
  return true;
}

std::vector<double> ConvergenceReport::column(const std::string& kind) const
{
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& row : rows) {
    const auto it = row.errors.find(kind);
    if (it == row.errors.end()) throw std::out_of_range("no error column '" + kind + "'");
    out.push_back(it->second);
  }
  return out;
}

std::vector<double> ConvergenceReport::mesh_sizes() const
{
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& row : rows) out.push_back(row.h);
  return out;
}

nlohmann::json ConvergenceReport::to_json() const
{
  nlohmann::json j;
  j["config"] = config;
  j["rows"] = nlohmann::json::array();
  for (const auto& row : rows) {
    nlohmann::json r;
    r["h"] = row.h;
    r["dofs"] = row.dofs;
    r["iterations"] = row.iterations;
    r["converged"] = row.converged;
    for (const auto& [kind, value] : row.errors) r["err_" + kind] = value;
    j["rows"].push_back(r);
  }
  j["rates"] = nlohmann::json::object();
  for (const auto& [kind, fit] : rates) j["rates"][kind] = {{"slope", fit.slope}, {"r2", fit.r2}};
  j["wall_time_s"] = wall_time_s;
  return j;
}

void ConvergenceReport::write_csv(std::ostream& out) const
{
  std::set<std::string> kinds;
  for (const auto& row : rows)
    for (const auto& [kind, value] : row.errors) kinds.insert(kind);
  const auto old_precision = out.precision(std::numeric_limits<double>::max_digits10);
  out << "h,dofs,iterations,converged";
  for (const auto& kind : kinds) out << ",err_" << kind;
  out << '\n';
  for (const auto& row : rows) {
    out << row.h << ',' << row.dofs << ',' << row.iterations << ',' << (row.converged ? 1 : 0);
    for (const auto& kind : kinds) {
      const auto it = row.errors.find(kind);
      out << ',';
      if (it != row.errors.end()) out << it->second;
    }
    out << '\n';
  }
  out.precision(old_precision);
}

}  // namespace nsfem
