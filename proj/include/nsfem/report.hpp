#ifndef NSFEM_REPORT_HPP
#define NSFEM_REPORT_HPP

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "nsfem/rates.hpp"

namespace nsfem {

struct ConvergenceRow {
  double h = 0.0;
  int dofs = 0;
  int iterations = 0;
  bool converged = false;
  std::map<std::string, double> errors;
};

/// Errors per mesh level (sorted by decreasing h) and fitted rates per
/// error kind.
struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  std::map<std::string, RateFit> rates;
  nlohmann::json config;
  double wall_time_s = 0.0;

  /// Sorts rows by decreasing h and fits a rate for every error key.
  void finalize();
  bool all_converged() const;
  /// True when the error of `kind` strictly decreases along the rows.
  bool strictly_decreasing(const std::string& kind) const;
  std::vector<double> column(const std::string& kind) const;
  std::vector<double> mesh_sizes() const;

  nlohmann::json to_json() const;
  void write_csv(std::ostream& out) const;
};

}  // namespace nsfem

#endif  // NSFEM_REPORT_HPP
