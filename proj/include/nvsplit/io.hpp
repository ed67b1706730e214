#ifndef NVSPLIT_IO_HPP
#define NVSPLIT_IO_HPP

#include <nvsplit/errorlab.hpp>

#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace nvsplit::io {

/// 17 significant digits: round-trips every double.
inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_trajectory(std::ostream& os, const Trajectory& tr) {
  os << 't';
  for (Eigen::Index c = 0; c < tr.states.cols(); ++c) os << ",x" << (c + 1);
  os << '\n';
  for (int k = 0; k <= tr.grid.steps(); ++k) {
    os << fmt(tr.grid.time(k));
    for (Eigen::Index c = 0; c < tr.states.cols(); ++c) os << ',' << fmt(tr.states(k, c));
    os << '\n';
  }
}

/// `N,M,err,ci_half` rows, then `slope,<v>` and `slope_ci,<v>` footers
/// (`nan` when the fit was rejected as degenerate).
inline void write_rates(std::ostream& os, const RateTable& t) {
  os << "N,M,err,ci_half\n";
  for (const auto& r : t.rows) os << r.N << ',' << r.M << ',' << fmt(r.err) << ',' << fmt(r.ci_half) << '\n';
  os << "slope," << (t.fit ? fmt(t.fit->slope) : std::string("nan")) << '\n';
  os << "slope_ci," << (t.fit ? fmt(t.fit->slope_ci) : std::string("nan")) << '\n';
}

inline void write_comparison(std::ostream& os, const ComparisonReport& rep) {
  os << "coord,mean_a,mean_b,var_a,var_b,ks,p\n";
  for (const auto& r : rep.rows) {
    os << r.coord << ',' << fmt(r.mean_a) << ',' << fmt(r.mean_b) << ',' << fmt(r.var_a) << ',' << fmt(r.var_b)
       << ',' << fmt(r.ks) << ',' << fmt(r.p) << '\n';
  }
}

inline void write_samples(std::ostream& os, const ErrorSampleSet& s) {
  for (Eigen::Index c = 0; c < s.samples.cols(); ++c) os << (c ? "," : "") << 'x' << (c + 1);
  os << '\n';
  for (Eigen::Index i = 0; i < s.samples.rows(); ++i) {
    for (Eigen::Index c = 0; c < s.samples.cols(); ++c) os << (c ? "," : "") << fmt(s.samples(i, c));
    os << '\n';
  }
}

inline void write_commutativity(std::ostream& os, const CommutativityReport& r) {
  os << "key,value\n"
     << "max_brownian_bracket," << fmt(r.max_brownian_bracket) << '\n'
     << "max_drift_bracket," << fmt(r.max_drift_bracket) << '\n'
     << "brownian_commute," << (r.brownian_commute ? "true" : "false") << '\n'
     << "drift_commutes," << (r.drift_commutes ? "true" : "false") << '\n'
     << "points_checked," << r.points_checked << '\n';
}

inline void write_key_values(std::ostream& os, const std::vector<std::pair<std::string, std::string>>& kv) {
  os << "key,value\n";
  for (const auto& [k, v] : kv) os << k << ',' << v << '\n';
}

/// Opens in binary mode so line endings are LF on every platform.
inline std::ofstream open_csv(const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw ConfigError("cannot open '" + path + "' for writing");
  return os;
}

}  // namespace nvsplit::io

#endif  // NVSPLIT_IO_HPP
