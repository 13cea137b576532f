#pragma once

// File formats: binary PPM images, JSON reports, CSV tables and traces.

#include "erligme/tasks.hpp"

#include "json.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace erligme {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// PPM (P6, maxval 255)

struct Image {
  Index n = 0;  ///< side; only square images are used by the tasks
  Vec data;     ///< 3n² samples in [0, 1], layout c·n² + j·n + i
};

namespace detail {

inline void skip_ppm_space(std::istream& in) {
  for (;;) {
    const int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      return;
    }
  }
}

inline long read_ppm_int(std::istream& in, const std::string& path) {
  skip_ppm_space(in);
  long v = -1;
  if (!(in >> v) || v < 0) throw IoError("malformed PPM header in " + path);
  return v;
}

}  // namespace detail

inline Image read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || magic[1] != '6') throw IoError(path + " is not a binary PPM (P6)");
  const long width = detail::read_ppm_int(in, path);
  const long height = detail::read_ppm_int(in, path);
  const long maxval = detail::read_ppm_int(in, path);
  if (maxval != 255) throw IoError(path + ": only 8-bit PPM (maxval 255) is supported");
  if (width != height || width < 1)
    throw IoError(path + ": expected a square image, got " + std::to_string(width) + "x" +
                  std::to_string(height));
  in.get();  // single whitespace before the raster
  const Index n = width;
  std::vector<unsigned char> raster(std::size_t(3 * n * n));
  in.read(reinterpret_cast<char*>(raster.data()), std::streamsize(raster.size()));
  if (in.gcount() != std::streamsize(raster.size())) throw IoError(path + ": truncated raster");
  Image img;
  img.n = n;
  img.data.resize(3 * n * n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      for (Index c = 0; c < 3; ++c)
        img.data[c * n * n + j * n + i] = raster[std::size_t(3 * (i * n + j) + c)] / 255.0;
  return img;
}

inline void write_ppm(const std::string& path, VecCRef x, Index n) {
  require_dim(x.size() == 3 * n * n, "write_ppm: expected 3n² samples");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << "P6\n" << n << " " << n << "\n255\n";
  std::vector<unsigned char> raster(std::size_t(3 * n * n));
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      for (Index c = 0; c < 3; ++c) {
        const double v = std::clamp(x[c * n * n + j * n + i], 0.0, 1.0);
        raster[std::size_t(3 * (i * n + j) + c)] = static_cast<unsigned char>(std::lround(v * 255.0));
      }
  out.write(reinterpret_cast<const char*>(raster.data()), std::streamsize(raster.size()));
  if (!out) throw IoError("failed writing " + path);
}

// ---------------------------------------------------------------------------
// Text helpers

/// Shortest round-trip decimal form; "nan"/"inf" spelled out.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  for (int prec = 6; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out) throw IoError("failed writing " + path);
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// Reports

namespace detail {

inline Json number_or_null(double v) {
  return std::isfinite(v) ? Json(v) : Json(nullptr);
}

}  // namespace detail

/// JSON form of one report. Wall time is left out so that reports are
/// reproducible byte for byte; see timing_csv.
inline Json report_to_json(const RunReport& r) {
  Json j;
  j["task"] = r.task;
  j["variant"] = r.variant;
  j["regularizer"] = to_string(r.cfg.regularizer);
  j["enhancement"] = to_string(r.cfg.enhancement);
  j["seed"] = r.seed;
  j["shift"] = r.shift;
  j["mu"] = r.cfg.mu;
  j["lambda1"] = r.cfg.lambda1;
  j["theta"] = r.cfg.theta;
  j["rho"] = r.cfg.rho;
  j["eps_s"] = r.cfg.eps_s;
  j["psnr_db"] = detail::number_or_null(r.psnr_db);
  j["converged"] = r.converged;
  j["stop_reason"] = r.stop_reason;
  j["iterations"] = r.iterations;
  j["final_residual"] = detail::number_or_null(r.final_residual);
  Json hist;
  if (!r.residuals.empty()) {
    const auto& h = r.residuals;
    hist["first"] = h.front();
    hist["min"] = *std::min_element(h.begin(), h.end());
    hist["last"] = h.back();
  }
  j["residual_summary"] = hist;
  j["max_relative_gap"] = r.max_relative_gap;
  j["sigma"] = r.sigma;
  j["tau"] = r.tau;
  if (r.task != "rpca") {
    j["hist_truth_mean"] = r.hist_truth_mean;
    j["hist_estimate_mean"] = r.hist_estimate_mean;
    j["hist_truth"] = r.hist_truth;
    j["hist_estimate"] = r.hist_estimate;
  }
  j["error"] = r.error;
  j["error_kind"] = r.error_kind;
  return j;
}

inline Json reports_to_json(const std::vector<RunReport>& reports) {
  Json arr = Json::array();
  for (const auto& r : reports) arr.push_back(report_to_json(r));
  return arr;
}

/// Column order of results.csv.
inline const std::vector<std::string>& results_columns() {
  static const std::vector<std::string> cols{
      "index", "task", "variant", "regularizer", "enhancement", "seed", "shift",
      "mu", "lambda1", "theta", "rho", "eps_s", "psnr_db", "iterations",
      "final_residual", "converged", "stop_reason", "max_relative_gap", "sigma", "tau",
      "hist_truth_mean", "hist_estimate_mean", "error"};
  return cols;
}

inline std::string results_csv(const std::vector<RunReport>& reports) {
  std::string out;
  for (std::size_t c = 0; c < results_columns().size(); ++c)
    out += (c ? "," : "") + results_columns()[c];
  out += "\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const RunReport& r = reports[i];
    const std::vector<std::string> row{
        std::to_string(i), r.task, r.variant, to_string(r.cfg.regularizer),
        to_string(r.cfg.enhancement), std::to_string(r.seed), std::to_string(r.shift),
        format_double(r.cfg.mu), format_double(r.cfg.lambda1), format_double(r.cfg.theta),
        format_double(r.cfg.rho), format_double(r.cfg.eps_s), format_double(r.psnr_db),
        std::to_string(r.iterations), format_double(r.final_residual),
        r.converged ? "1" : "0", r.stop_reason, format_double(r.max_relative_gap),
        format_double(r.sigma), format_double(r.tau),
        r.task == "rpca" ? "" : format_double(r.hist_truth_mean),
        r.task == "rpca" ? "" : format_double(r.hist_estimate_mean), csv_escape(r.error)};
    for (std::size_t c = 0; c < row.size(); ++c) out += (c ? "," : "") + row[c];
    out += "\n";
  }
  return out;
}

/// Maximum-PSNR table: one row per (variant, shift).
inline std::string summary_csv(const std::vector<BestEntry>& best) {
  std::string out = "variant,shift,max_psnr_db,mu,lambda1,report_index\n";
  for (const auto& b : best)
    out += b.variant + "," + std::to_string(b.shift) + "," + format_double(b.psnr_db) + "," +
           format_double(b.mu) + "," + format_double(b.lambda1) + "," +
           std::to_string(b.report) + "\n";
  return out;
}

/// Pivoted maximum-PSNR table: variants as rows (in order of first
/// appearance), one column per shift. Missing cells are left empty.
inline std::string comparison_csv(const std::vector<BestEntry>& best, const std::vector<int>& shifts,
                                  const std::vector<std::string>& variants) {
  std::string out = "variant";
  for (int s : shifts) out += ",shift_" + std::to_string(s);
  out += "\n";
  for (const auto& v : variants) {
    out += v;
    for (int s : shifts) {
      out += ",";
      for (const auto& b : best)
        if (b.variant == v && b.shift == s) out += format_double(b.psnr_db);
    }
    out += "\n";
  }
  return out;
}

/// Per-iteration trace: k, residual, objective, max_epigraph_gap.
inline std::string trace_csv(const RunReport& r) {
  std::string out = "k,residual,objective,max_epigraph_gap\n";
  for (std::size_t k = 0; k < r.residuals.size(); ++k) {
    const double obj = k < r.objectives.size() ? r.objectives[k]
                                               : std::numeric_limits<double>::quiet_NaN();
    const double gap = k < r.gaps.size() ? r.gaps[k] : std::numeric_limits<double>::quiet_NaN();
    out += std::to_string(k + 1) + "," + format_double(r.residuals[k]) + "," +
           format_double(obj) + "," + format_double(gap) + "\n";
  }
  return out;
}

/// Wall-clock seconds per report (the only non-reproducible output).
inline std::string timing_csv(const std::vector<RunReport>& reports) {
  std::string out = "index,variant,seconds\n";
  for (std::size_t i = 0; i < reports.size(); ++i)
    out += std::to_string(i) + "," + reports[i].variant + "," + format_double(reports[i].seconds) +
           "\n";
  return out;
}

}  // namespace erligme
