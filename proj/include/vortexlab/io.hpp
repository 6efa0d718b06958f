#pragma once

// Needs the vendored nlohmann/json single header on the include path.
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "vortexlab/diagnostics.hpp"
#include "vortexlab/error.hpp"
#include "vortexlab/field.hpp"

namespace vortexlab {

using Json = nlohmann::json;

inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline void write_json(const Json& j, std::string& out, int indent, int depth) {
  const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
  const std::string close(static_cast<std::size_t>(indent * depth), ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      // nlohmann::json keeps object keys in a std::map, so iteration is sorted
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad + Json(it.key()).dump() + ": ";
        write_json(it.value(), out, indent, depth + 1);
      }
      out += "\n" + close + "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      for (std::size_t k = 0; k < j.size(); ++k) {
        if (k) out += ",\n";
        out += pad;
        write_json(j[k], out, indent, depth + 1);
      }
      out += "\n" + close + "]";
      return;
    }
    case Json::value_t::number_float: {
      const double v = j.get<double>();
      out += std::isfinite(v) ? format_g17(v) : "null";
      return;
    }
    default:
      out += j.dump();
  }
}

}  // namespace detail

/// Deterministic JSON text: sorted keys, doubles at 17 significant digits,
/// non-finite doubles as null, trailing newline.
inline std::string to_report_json(const Json& j) {
  std::string out;
  detail::write_json(j, out, 2, 0);
  out += "\n";
  return out;
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::InvalidConfig, "cannot open " + path + " for writing");
  f << text;
  if (!f) throw Error(ErrorCode::InvalidConfig, "write to " + path + " failed");
}

/// ".fld" dump: header lines `vortexfld 1`, `nx ny`, `x0 y0 hx hy`, then the
/// values row-major one per line, all reals at 17 significant digits.
inline std::string fld_text(const ScalarField& f) {
  const Grid2D& g = f.grid();
  std::string out = "vortexfld 1\n";
  out += std::to_string(g.nx) + " " + std::to_string(g.ny) + "\n";
  out += format_g17(g.x0) + " " + format_g17(g.y0) + " " + format_g17(g.hx) + " " + format_g17(g.hy) + "\n";
  out.reserve(out.size() + f.size() * 25);
  for (double v : f.values()) {
    out += format_g17(v);
    out += '\n';
  }
  return out;
}

inline void write_fld(const std::string& path, const ScalarField& f) { write_text_file(path, fld_text(f)); }

/// Reads a ".fld" dump. The grid kind is not stored; `kind` supplies it.
inline ScalarField read_fld(const std::string& path, GridKind kind) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidConfig, "cannot open " + path);
  std::string magic;
  int version = 0;
  Grid2D g;
  in >> magic >> version >> g.nx >> g.ny >> g.x0 >> g.y0 >> g.hx >> g.hy;
  if (!in || magic != "vortexfld" || version != 1 || g.nx < 1 || g.ny < 1) {
    throw Error(ErrorCode::InvalidConfig, path + " is not a vortexfld 1 file");
  }
  g.kind = kind;
  std::vector<double> v(g.size());
  for (auto& x : v) {
    std::string tok;
    if (!(in >> tok)) throw Error(ErrorCode::InvalidConfig, path + " ends early");
    x = std::stod(tok);
  }
  return ScalarField(g, std::move(v));
}

inline std::string profile_csv(const std::vector<ProfileRow>& rows) {
  std::string out = "r,u1_ring_mean,u2_ring_mean,decay_quantity\n";
  for (const auto& row : rows) {
    out += format_g17(row.r) + "," + format_g17(row.u1) + "," + format_g17(row.u2) + "," + format_g17(row.decay) + "\n";
  }
  return out;
}

}  // namespace vortexlab
