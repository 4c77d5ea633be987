#ifndef OCE_IO_HPP
#define OCE_IO_HPP

#include <array>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <system_error>

#include <json.hpp>

#include "oce/fields.hpp"
#include "oce/grid.hpp"
#include "oce/hjbi.hpp"
#include "oce/loss.hpp"
#include "oce/policy.hpp"
#include "oce/validation.hpp"

namespace oce::io {

/// Shortest decimal that round-trips, so equal doubles give equal text.
inline std::string format_double(double x)
{
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return {buf.data(), res.ptr};
}

inline std::ofstream open_for_write(const std::filesystem::path& path)
{
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

inline std::string slice_name(const std::string& stem, std::size_t i)
{
  std::string digits = std::to_string(i);
  if (digits.size() < 4) digits.insert(0, 4 - digits.size(), '0');
  return stem + "_t" + digits + ".csv";
}

/// Matrix with a coordinate header row and a coordinate first column.
inline void write_matrix_csv(std::ostream& out, const std::string& corner, const UniformGrid& rows,
                             const UniformGrid& cols, std::span<const double> values, std::size_t stride = 1,
                             std::size_t offset = 0)
{
  out << corner;
  for (std::size_t c = 0; c < cols.size(); ++c) out << ',' << format_double(cols[c]);
  out << '\n';
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out << format_double(rows[r]);
    for (std::size_t c = 0; c < cols.size(); ++c)
      out << ',' << format_double(values[(r * cols.size() + c) * stride + offset]);
    out << '\n';
  }
}

/// One row per t node, one column per y node.
inline void write_field_csv(const std::filesystem::path& path, const ValueField2D& field)
{
  auto out = open_for_write(path);
  write_matrix_csv(out, "t\\y", field.t_grid, field.y_grid, field.values);
}

/// One file per t slice (every t_stride-th, always including t = 0 and T);
/// rows are y nodes, columns z nodes.
inline void write_field_slices(const std::filesystem::path& dir, const ValueField3D& field, std::size_t t_stride = 1)
{
  std::filesystem::create_directories(dir);
  const std::size_t nt = field.t_grid.size();
  for (std::size_t i = 0; i < nt; ++i) {
    if (i % t_stride != 0 && i + 1 != nt) continue;
    auto out = open_for_write(dir / slice_name("value", i));
    write_matrix_csv(out, "y\\z", field.y_grid, field.z_grid, field.slice(i));
  }
}

/// Same layout as the value slices: one file per control component and one
/// for beta.
inline void write_policy_slices(const std::filesystem::path& dir, const PolicyField& policy, std::size_t t_stride = 1)
{
  std::filesystem::create_directories(dir);
  const std::size_t nt = policy.t_grid().size();
  const std::size_t per_slice = policy.y_grid().size() * policy.z_grid().size();
  const std::size_t m = policy.control_dim();
  for (std::size_t i = 0; i < nt; ++i) {
    if (i % t_stride != 0 && i + 1 != nt) continue;
    for (std::size_t c = 0; c < m; ++c) {
      auto out = open_for_write(dir / slice_name("alpha" + std::to_string(c), i));
      write_matrix_csv(out, "y\\z", policy.y_grid(), policy.z_grid(),
                       std::span<const double>(policy.alpha_data()).subspan(i * per_slice * m, per_slice * m), m, c);
    }
    auto out = open_for_write(dir / slice_name("beta", i));
    write_matrix_csv(out, "y\\z", policy.y_grid(), policy.z_grid(),
                     std::span<const double>(policy.beta_data()).subspan(i * per_slice, per_slice));
  }
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& doc)
{
  auto out = open_for_write(path);
  out << doc.dump(2) << '\n';
}

inline nlohmann::json grid_json(const UniformGrid& g)
{
  return {{"lo", g.lo()}, {"hi", g.hi()}, {"n", g.size()}};
}

inline nlohmann::json to_json(const HjbiStats& s)
{
  return {{"substeps", s.substeps},
          {"max_rate", s.max_rate},
          {"saturated_nodes", s.saturated_nodes},
          {"max_concavity_violation", s.max_concavity_violation},
          {"value_scale", s.value_scale},
          {"warnings", s.warnings}};
}

inline nlohmann::json field_metadata(const ValueField3D& field)
{
  return {{"t_grid", grid_json(field.t_grid)},
          {"y_grid", grid_json(field.y_grid)},
          {"z_grid", grid_json(field.z_grid)},
          {"beta_bound", field.beta_bound},
          {"layout", "value_tNNNN.csv: rows y, columns z"}};
}

inline nlohmann::json field_metadata(const ValueField2D& field)
{
  return {{"t_grid", grid_json(field.t_grid)},
          {"y_grid", grid_json(field.y_grid)},
          {"terminal", field.terminal_desc},
          {"substeps", field.substeps},
          {"layout", "rows t, columns y"}};
}

inline nlohmann::json to_json(const AssumptionReport& rep)
{
  nlohmann::json clauses = nlohmann::json::array();
  for (const auto& c : rep.clauses)
    clauses.push_back({{"clause", c.clause}, {"passed", c.passed}, {"worst", c.worst}, {"detail", c.detail}});
  return {{"all_passed", rep.all_passed()},
          {"clauses", clauses},
          {"conjugate_max_deviation", rep.conjugate_max_deviation},
          {"fenchel_young_violations", rep.fenchel_young_violations}};
}

inline nlohmann::json to_json(const PropertyReport& rep)
{
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& v : rep.checks)
    checks.push_back({{"check", v.check},
                      {"passed", v.passed},
                      {"worst", v.worst},
                      {"tolerance", v.tolerance},
                      {"at", {{"t", v.t}, {"y", v.y}, {"z", v.z}}}});
  return {{"all_passed", rep.all_passed()}, {"checks", checks}};
}

} // namespace oce::io

#endif // OCE_IO_HPP
