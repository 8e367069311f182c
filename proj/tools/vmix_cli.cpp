// vmix: command-line driver for the Volterra mixed finite element studies.
//
//   vmix run          single simulation on one level (probe CSV for laplace)
//   vmix convergence  study over the configured levels plus CSV/Markdown/SVG report
//   vmix certificate  stability and error constants (calculator or estimator pass)
//   vmix audit        recurrence vs direct history sums on one level
//
// Exit codes: 0 ok, 2 configuration/input, 3 solver failure, 4 time-step gate.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vmix/config.hpp"
#include "vmix/constants.hpp"
#include "vmix/exit_codes.hpp"
#include "vmix/report.hpp"
#include "vmix/study.hpp"

namespace {

struct ConfigArgs {
  std::string file;
  std::string problem;
  std::vector<std::string> sets;
  bool long_protocol = false;
  std::string out;
};

void add_config_options(CLI::App* cmd, ConfigArgs& a) {
  cmd->add_option("-c,--config", a.file, "JSON configuration file");
  cmd->add_option("-p,--problem", a.problem, "beam or laplace (when no config file is given)")
      ->check(CLI::IsMember({"beam", "laplace"}));
  cmd->add_option("--set", a.sets, "override a key, e.g. --set kernel.delta=0.02")
      ->take_all();
  cmd->add_flag("--paper-scale", a.long_protocol, "use the long experiment protocols");
  cmd->add_option("-o,--out", a.out, "output directory (overrides output_dir)");
}

vmix::StudyConfig load_config(const ConfigArgs& a) {
  vmix::json doc = vmix::json::object();
  if (!a.file.empty()) doc = vmix::load_json_file(a.file);
  if (!a.problem.empty()) doc["problem"] = a.problem;
  if (!doc.contains("problem"))
    throw vmix::ConfigError("no problem given: pass --config FILE or --problem beam|laplace");
  for (const auto& s : a.sets) vmix::apply_override(doc, s);
  if (!a.out.empty()) doc["output_dir"] = a.out;
  return vmix::parse_config(doc, a.long_protocol);
}

std::string stem(const vmix::StudyConfig& c) {
  return c.problem == vmix::Problem::beam ? "beam_convergence" : "laplace_convergence";
}

int cmd_run(const ConfigArgs& a, std::optional<std::size_t> level) {
  auto c = load_config(a);
  c.levels = {level ? *level : c.levels.back()};
  if (c.problem == vmix::Problem::beam && c.beam.profile == vmix::BeamProfile::joined &&
      c.levels[0] % 2 != 0)
    throw vmix::ConfigError("joined beams need an even element count");
  c.estimate_constants = false;
  const auto rep = vmix::run_study(c);
  const auto& L = rep.rows.front();
  std::cout << "level " << L.level << "  DOF " << L.dof << "  h " << vmix::fmt_e(L.h) << "\n";
  for (std::size_t f = 0; f < rep.fields.size(); ++f)
    std::cout << "  " << rep.fields[f] << " = " << vmix::fmt_e(L.errors[f]) << "\n";
  const std::filesystem::path dir(c.output_dir);
  if (c.problem == vmix::Problem::laplace && !L.probe_t.empty()) {
    const auto p = dir / "laplace_probe.csv";
    const auto& pt = *c.probe;
    const double amp = (pt[0] - pt[0] * pt[0]) * (pt[1] - pt[1] * pt[1]);
    vmix::write_text(p, vmix::probe_csv(L.probe_t, L.probe_u, amp));
    std::cout << "probe series written to " << p.string() << "\n";
  }
  return 0;
}

int cmd_convergence(const ConfigArgs& a, bool certificates) {
  const auto c = load_config(a);
  const std::filesystem::path dir(c.output_dir);
  vmix::ReportFormats formats;
  formats.svg = c.emit_svg;
  // flush after every level so a late failure keeps the finished rows
  const auto rep = vmix::run_study(c, [&](const vmix::ConvergenceReport& r) {
    vmix::emit_report(r, dir, stem(c), formats);
  });
  std::cout << vmix::report_markdown(rep);
  if (certificates)
    for (const auto& L : rep.rows)
      if (L.certificate) std::cout << "\n" << vmix::emit_certificate(L);
  std::cout << "\nreport written to " << (dir / stem(c)).string() << ".{csv,md"
            << (formats.svg ? ",svg" : "") << ",meta.json}  config " << rep.config_hash << "  "
            << rep.wall_seconds << " s\n";
  return 0;
}

struct CalcArgs {
  std::optional<double> alpha0, beta, norm_a, norm_b;
  double ck1 = 0.0, ck2 = 0.0, ck3 = 0.0, cktilde = 0.0, T = 1.0;
};

int cmd_certificate(const ConfigArgs& a, const CalcArgs& k) {
  const bool calculator = k.alpha0 || k.beta || k.norm_a || k.norm_b;
  if (calculator) {
    if (!k.alpha0 || !k.beta || !k.norm_a)
      throw vmix::ConfigError(
          "certificate: calculator mode needs --alpha0, --beta and --norm-a (or drop them and "
          "pass a config to run the estimator pass)");
    const auto s = vmix::stability_constants(*k.alpha0, *k.beta, *k.norm_a, k.ck1, k.ck2, k.ck3,
                                             k.cktilde, k.T);
    if (k.norm_b) {
      const auto e = vmix::error_constants(*k.alpha0, *k.beta, *k.norm_a, *k.norm_b, k.ck1,
                                           k.ck2, k.ck3, k.cktilde, k.T);
      std::cout << vmix::format_constants(s, &e);
    } else {
      std::cout << vmix::format_constants(s, nullptr);
    }
    return 0;
  }
  auto c = load_config(a);
  c.estimate_constants = true;
  const auto rep = vmix::run_study(c);
  bool holds = true;
  for (const auto& L : rep.rows) {
    std::cout << vmix::emit_certificate(L) << "\n";
    holds = holds && L.certificate->slack >= 0.0;
  }
  return holds ? vmix::exit_ok : vmix::exit_solver;
}

int cmd_audit(const ConfigArgs& a, std::optional<std::size_t> level) {
  auto c = load_config(a);
  c.levels = {level ? *level : c.levels.front()};
  c.audit_history = true;
  c.estimate_constants = false;
  const auto rep = vmix::run_study(c);
  const auto& L = rep.rows.front();
  constexpr double tol = 1e-12;
  std::cout << "level " << L.level << ": " << c.n_steps << " steps, max relative discrepancy "
            << vmix::fmt_e(L.audit_discrepancy) << " (tolerance " << vmix::fmt_e(tol) << ")\n";
  if (!(L.audit_discrepancy <= tol)) {
    std::cerr << "audit failed: recurrence and direct sums disagree\n";
    return vmix::exit_solver;
  }
  std::cout << "audit passed\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Volterra mixed finite element studies (beam, laplace)", "vmix"};
  app.require_subcommand(1);

  ConfigArgs run_args, conv_args, cert_args, audit_args;
  std::optional<std::size_t> run_level, audit_level;
  bool print_certificates = false;
  CalcArgs calc;

  auto* run = app.add_subcommand("run", "single simulation with probe output");
  add_config_options(run, run_args);
  run->add_option("--level", run_level, "mesh size (n_elements or m); default finest level");

  auto* conv = app.add_subcommand("convergence", "convergence study and report");
  add_config_options(conv, conv_args);
  conv->add_flag("--certificates", print_certificates, "print the certificate of each level");

  auto* cert = app.add_subcommand("certificate", "stability and error constants");
  add_config_options(cert, cert_args);
  cert->add_option("--alpha0", calc.alpha0, "kernel ellipticity constant");
  cert->add_option("--beta", calc.beta, "inf-sup constant");
  cert->add_option("--norm-a", calc.norm_a, "continuity constant of a");
  cert->add_option("--norm-b", calc.norm_b, "continuity constant of b (error constants)");
  cert->add_option("--ck1", calc.ck1, "bound of k1");
  cert->add_option("--ck2", calc.ck2, "bound of k2");
  cert->add_option("--ck3", calc.ck3, "bound of k3");
  cert->add_option("--cktilde", calc.cktilde, "bound of |k1 - k3|");
  cert->add_option("--T", calc.T, "final time");

  auto* audit = app.add_subcommand("audit", "history recurrence check");
  add_config_options(audit, audit_args);
  audit->add_option("--level", audit_level, "mesh size; default coarsest level");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return vmix::exit_config;
  }

  try {
    if (*run) return cmd_run(run_args, run_level);
    if (*conv) return cmd_convergence(conv_args, print_certificates);
    if (*cert) return cmd_certificate(cert_args, calc);
    if (*audit) return cmd_audit(audit_args, audit_level);
  } catch (const std::exception& e) {
    const int code = vmix::exit_code_for(e);
    const char* kind = code == vmix::exit_solver ? "solver failure: " : "error: ";
    std::cerr << kind << e.what() << "\n";
    return code;
  }
  return 0;
}
