#pragma once

// CSV and JSON emission. Reals are written with 17 significant digits via
// std::to_chars, which is locale independent and round-trips exactly.

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dp2/core.hpp"
#include "dp2/emden.hpp"
#include "dp2/pdesolver.hpp"
#include "dp2/residual.hpp"
#include "dp2/riccati.hpp"

namespace dp2::io {

using nlohmann::json;

inline std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

/// Plain table: header names and rows of reals.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  void add(std::initializer_list<double> row) { rows.emplace_back(row); }
};

inline std::string to_csv(const Table& t) {
  std::string out;
  for (std::size_t i = 0; i < t.header.size(); ++i) {
    if (i) out += ',';
    out += t.header[i];
  }
  out += '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += format_real(row[i]);
    }
    out += '\n';
  }
  return out;
}

/// Table as an array of records keyed by the header.
inline json to_json(const Table& t) {
  json arr = json::array();
  for (const auto& row : t.rows) {
    json rec = json::object();
    for (std::size_t i = 0; i < row.size() && i < t.header.size(); ++i) rec[t.header[i]] = row[i];
    arr.push_back(std::move(rec));
  }
  return arr;
}

inline void write_text(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  detail::require(static_cast<bool>(os), Errc::InvalidArgument, "out",
                  "cannot open " + path.string() + " for writing");
  os << text;
}

inline void write_json(const std::filesystem::path& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

/// NaN and infinities become null.
inline json real_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline Table samples_table(const emden::Trajectory& traj) {
  Table t{{"s", "a", "a_dot"}, {}};
  for (const auto& s : traj.samples()) t.add({s.s, s.a, s.a_dot});
  return t;
}

inline json summary(const emden::Trajectory& traj) {
  return {{"fate", std::string(emden::to_string(traj.fate().kind))},
          {"S", real_or_null(traj.fate().S)},
          {"energy_drift_max", traj.energy_drift_max()}};
}

inline json to_json(const residual::ResidualReport& r) {
  auto opt = [](const std::optional<double>& v) {
    return v ? json(*v) : json("NotApplicable");
  };
  json levels = json::array();
  for (const auto& lv : r.levels)
    levels.push_back({{"h", lv.h}, {"dt", lv.dt}, {"mass_linf", lv.mass_linf},
                      {"momentum_linf", lv.momentum_linf}});
  return {{"grid_h", r.grid_h},
          {"dt", r.dt},
          {"mass_eq_linf", r.mass_eq_linf},
          {"momentum_eq_linf", r.momentum_eq_linf},
          {"interior_band", r.interior_band},
          {"interior_points", r.interior_points},
          {"order_estimate_mass", opt(r.order_estimate_mass)},
          {"order_estimate_momentum", opt(r.order_estimate_momentum)},
          {"levels", levels}};
}

inline json to_json(const riccati::BlowupCriterion& crit, const riccati::Outcome& out) {
  return {{"M", crit.M},
          {"v0", crit.v0},
          {"c", crit.c()},
          {"applies", out.blows_up()},
          {"T_bound", out.T ? json(*out.T) : json(nullptr)}};
}

inline Table trajectory_table(std::span<const riccati::TrajectoryPoint> pts) {
  Table t{{"t", "v"}, {}};
  for (const auto& p : pts) t.add({p.t, p.v});
  return t;
}

inline Table diagnostics_table(std::span<const pde::DiagnosticRecord> series) {
  Table t{{"t", "min_ux", "max_rho"}, {}};
  for (const auto& r : series) t.add({r.t, r.min_ux, r.max_rho});
  return t;
}

}  // namespace dp2::io
