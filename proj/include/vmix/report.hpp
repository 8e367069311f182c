#pragma once

// Report rendering: CSV, Markdown, log-log SVG, metadata and certificate text.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "vmix/errors.hpp"
#include "vmix/study.hpp"

namespace vmix {

inline std::string fmt_e(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6e", v);
  return buf;
}

inline std::string fmt_rate(const std::optional<double>& r) { return r ? fmt_e(*r) : "--"; }

inline std::string rate_name(const std::string& field) {
  return "r" + field.substr(1);  // e0_M -> r0_M
}

/// CSV: DOF,h,e0_F1,r0_F1,... with %.6e numbers and "--" for undefined rates.
inline std::string report_csv(const ConvergenceReport& rep) {
  std::ostringstream os;
  os << "DOF,h";
  for (const auto& f : rep.fields) os << "," << f << "," << rate_name(f);
  os << "\n";
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    const auto& r = rep.rows[i];
    os << r.dof << "," << fmt_e(r.h);
    for (std::size_t f = 0; f < rep.fields.size(); ++f)
      os << "," << fmt_e(r.errors[f]) << "," << fmt_rate(rep.rate(i, f));
    os << "\n";
  }
  return os.str();
}

inline std::string report_markdown(const ConvergenceReport& rep) {
  std::ostringstream os;
  os << "| DOF | h |";
  for (const auto& f : rep.fields) os << " " << f << " | " << rate_name(f) << " |";
  os << "\n|---:|---:|";
  for (std::size_t f = 0; f < rep.fields.size(); ++f) os << "---:|---:|";
  os << "\n";
  char buf[32];
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    const auto& r = rep.rows[i];
    std::snprintf(buf, sizeof buf, "%.4f", r.h);
    os << "| " << r.dof << " | " << buf << " |";
    for (std::size_t f = 0; f < rep.fields.size(); ++f) {
      std::snprintf(buf, sizeof buf, "%.4e", r.errors[f]);
      os << " " << buf << " | ";
      if (const auto rate = rep.rate(i, f)) {
        std::snprintf(buf, sizeof buf, "%.2f", *rate);
        os << buf;
      } else {
        os << "--";
      }
      os << " |";
    }
    os << "\n";
  }
  return os.str();
}

/// Log-log plot of every error column against h, with slope-1 and slope-2
/// reference lines anchored at the coarsest row.
inline std::string report_svg(const ConvergenceReport& rep) {
  constexpr double W = 640, H = 480, ml = 70, mr = 150, mt = 30, mb = 50;
  double hmin = std::numeric_limits<double>::infinity(), hmax = 0.0;
  double emin = std::numeric_limits<double>::infinity(), emax = 0.0;
  for (const auto& r : rep.rows) {
    hmin = std::min(hmin, r.h);
    hmax = std::max(hmax, r.h);
    for (double e : r.errors)
      if (e > 0.0) {
        emin = std::min(emin, e);
        emax = std::max(emax, e);
      }
  }
  if (!(emax > 0.0) || !(hmax > 0.0)) throw IoError("report_svg: nothing positive to plot");
  if (hmin == hmax) {
    hmin /= 2.0;
    hmax *= 2.0;
  }
  // slope-2 line spans the widest range; make room for it
  emin = std::min(emin, emax * std::pow(hmin / hmax, 2.0));
  const double lx0 = std::floor(std::log10(hmin)), lx1 = std::ceil(std::log10(hmax));
  const double ly0 = std::floor(std::log10(emin)), ly1 = std::ceil(std::log10(emax));
  auto X = [&](double h) { return ml + (std::log10(h) - lx0) / (lx1 - lx0) * (W - ml - mr); };
  auto Y = [&](double e) { return H - mb - (std::log10(e) - ly0) / (ly1 - ly0) * (H - mt - mb); };
  auto num = [](double v) {
    char b[32];
    std::snprintf(b, sizeof b, "%.2f", v);
    return std::string(b);
  };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << W - ml - mr << "\" height=\""
     << H - mt - mb << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double d = lx0; d <= lx1; d += 1.0)
    os << "<text x=\"" << num(X(std::pow(10.0, d))) << "\" y=\"" << H - mb + 18
       << "\" text-anchor=\"middle\">1e" << d << "</text>\n";
  for (double d = ly0; d <= ly1; d += 1.0)
    os << "<text x=\"" << ml - 6 << "\" y=\"" << num(Y(std::pow(10.0, d)) + 4)
       << "\" text-anchor=\"end\">1e" << d << "</text>\n";
  os << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << H - 10
     << "\" text-anchor=\"middle\">h</text>\n";
  os << "<text x=\"16\" y=\"" << (mt + H - mb) / 2 << "\" transform=\"rotate(-90 16 "
     << (mt + H - mb) / 2 << ")\" text-anchor=\"middle\">error</text>\n";

  for (int slope = 1; slope <= 2; ++slope) {
    const double e_hi = emax, e_lo = emax * std::pow(hmin / hmax, slope);
    os << "<polyline fill=\"none\" stroke=\"gray\" stroke-dasharray=\"4 3\" points=\""
       << num(X(hmax)) << "," << num(Y(e_hi)) << " " << num(X(hmin)) << "," << num(Y(e_lo))
       << "\"/>\n";
    os << "<text x=\"" << num(X(hmin) + 4) << "\" y=\"" << num(Y(e_lo))
       << "\" fill=\"gray\">slope " << slope << "</text>\n";
  }
  for (std::size_t f = 0; f < rep.fields.size(); ++f) {
    const char* col = colors[f % 6];
    os << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& r : rep.rows)
      if (r.errors[f] > 0.0) os << num(X(r.h)) << "," << num(Y(r.errors[f])) << " ";
    os << "\"/>\n";
    for (const auto& r : rep.rows)
      if (r.errors[f] > 0.0)
        os << "<circle cx=\"" << num(X(r.h)) << "\" cy=\"" << num(Y(r.errors[f]))
           << "\" r=\"3\" fill=\"" << col << "\"/>\n";
    const double ly = mt + 16.0 * static_cast<double>(f + 1);
    os << "<line x1=\"" << W - mr + 10 << "\" y1=\"" << ly - 4 << "\" x2=\"" << W - mr + 30
       << "\" y2=\"" << ly - 4 << "\" stroke=\"" << col << "\" stroke-width=\"1.5\"/>\n";
    os << "<text x=\"" << W - mr + 36 << "\" y=\"" << ly << "\">" << rep.fields[f] << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

/// Wall time and config hash live here so the CSV stays byte-stable.
inline std::string report_meta(const ConvergenceReport& rep) {
  nlohmann::json j = {{"config_hash", rep.config_hash},
                      {"wall_seconds", rep.wall_seconds},
                      {"levels", nlohmann::json::array()}};
  for (const auto& r : rep.rows) {
    nlohmann::json l = {{"level", r.level},
                        {"dof", r.dof},
                        {"factorizations", r.factorizations},
                        {"audit_discrepancy", r.audit_discrepancy}};
    if (r.certificate) {
      l["slack"] = std::isfinite(r.certificate->slack) ? nlohmann::json(r.certificate->slack)
                                                       : nlohmann::json("inf");
    }
    j["levels"].push_back(l);
  }
  return j.dump(2) + "\n";
}

inline std::string probe_csv(const std::vector<double>& t, const std::vector<double>& u,
                             double exact_amplitude) {
  std::ostringstream os;
  os << "t,u_h,u_exact\n";
  for (std::size_t i = 0; i < t.size(); ++i)
    os << fmt_e(t[i]) << "," << fmt_e(u[i]) << "," << fmt_e(exact_amplitude * std::cos(t[i]))
       << "\n";
  return os.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  out.close();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

struct ReportFormats {
  bool csv = true, md = true, svg = true;
};

/// Writes <stem>.csv/.md/.svg and <stem>.meta.json under `dir`.
inline std::vector<std::filesystem::path> emit_report(const ConvergenceReport& rep,
                                                      const std::filesystem::path& dir,
                                                      const std::string& stem,
                                                      ReportFormats formats = {}) {
  if (rep.rows.empty()) throw ParameterError("emit_report: empty report");
  std::vector<std::filesystem::path> written;
  auto put = [&](const std::string& ext, const std::string& text) {
    const auto p = dir / (stem + ext);
    write_text(p, text);
    written.push_back(p);
  };
  if (formats.csv) put(".csv", report_csv(rep));
  if (formats.md) put(".md", report_markdown(rep));
  if (formats.svg) put(".svg", report_svg(rep));
  put(".meta.json", report_meta(rep));
  return written;
}

namespace detail {

inline std::string fmt_g(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace detail

inline std::string format_constants(const StabilityConstants& s, const ErrorConstants* e) {
  using detail::fmt_g;
  std::ostringstream os;
  os << "inputs: alpha0=" << fmt_g(s.alpha0) << " beta=" << fmt_g(s.beta)
     << " |a|=" << fmt_g(s.norm_a);
  if (e) os << " |b|=" << fmt_g(e->norm_b);
  os << " C_k1=" << fmt_g(s.C_k1) << " C_k2=" << fmt_g(s.C_k2) << " C_k3=" << fmt_g(s.C_k3)
     << " C_ktilde=" << fmt_g(s.C_ktilde) << " T=" << fmt_g(s.T) << "\n";
  os << "stability: C1=" << fmt_g(s.C1) << " C2=" << fmt_g(s.C2) << " C3=" << fmt_g(s.C3)
     << " C4=" << fmt_g(s.C4) << "\n";
  if (e) {
    os << "discrete:  C1*=" << fmt_g(e->C1s) << " C2*=" << fmt_g(e->C2s)
       << " C3*=" << fmt_g(e->C3s) << " C4*=" << fmt_g(e->C4s) << "\n";
    os << "error:     C1u=" << fmt_g(e->C1u) << " C1p=" << fmt_g(e->C1p)
       << " C2u=" << fmt_g(e->C2u) << " C2p=" << fmt_g(e->C2p) << "\n";
  }
  return os.str();
}

/// Certificate text for one completed level.
inline std::string emit_certificate(const StudyLevel& level) {
  if (!level.certificate)
    throw ConfigError("certificate: no estimates for this level; enable the estimator pass "
                      "(estimate_constants=true) or supply --alpha0/--beta/--norm-a");
  using detail::fmt_g;
  const auto& c = *level.certificate;
  std::ostringstream os;
  os << "level " << level.level << " (DOF " << level.dof << ", h " << fmt_g(level.h) << ")"
     << (c.estimates.dense ? " [dense estimates]" : " [iterative estimates]") << "\n";
  os << format_constants(c.stability, &c.error);
  os << "measured: |u|=" << fmt_g(c.measured.u_norm) << " |p|=" << fmt_g(c.measured.p_norm)
     << " |f|=" << fmt_g(c.measured.f_norm) << " |g|=" << fmt_g(c.measured.g_norm) << "\n";
  os << "bound (C1+C3)|f| + (C2+C4)|g| = " << fmt_g(c.bound) << ", |u| + |p| = " << fmt_g(c.lhs)
     << ", slack = " << fmt_g(c.slack) << (c.slack >= 0.0 ? " (holds)" : " (VIOLATED)") << "\n";
  return os.str();
}

}  // namespace vmix
