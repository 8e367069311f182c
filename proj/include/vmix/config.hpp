#pragma once

// Study configuration: a single JSON document, optionally patched by
// key=value overrides, validated into a StudyConfig.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "vmix/beam.hpp"
#include "vmix/errors.hpp"
#include "vmix/kernels.hpp"
#include "vmix/laplace.hpp"

namespace vmix {

using json = nlohmann::json;

enum class Problem { beam, laplace };

struct KernelSpec {
  std::string type = "sls";  // sls | fickian | custom_exp | modulus | none
  PronySLS sls{1.0, 1.0, 1.0};
  double delta = 0.01;
  double coeff = 0.0, rate = 0.0;
  RelaxationModulus modulus{1.0, 0.5, 1.0};
  double e0 = 1.0;  // E(0) for custom_exp / none
};

struct StudyConfig {
  Problem problem = Problem::beam;
  BeamConfig beam;
  KernelSpec kernel;
  MemoryForm memory_form = MemoryForm::pde;
  std::optional<std::array<double, 2>> probe;
  double T = 15.0;
  std::size_t n_steps = 1500;
  std::vector<std::size_t> levels;
  std::size_t n_ref_factor = 16;
  std::string output_dir = "out";
  bool audit_history = false;
  bool emit_svg = true;
  bool estimate_constants = true;
  json canonical;  // fully-resolved document, hashed for report metadata
};

namespace detail {

inline double number(const json& j, const char* key) {
  if (!j.is_number()) throw ConfigError(std::string("config: '") + key + "' must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(std::string("config: '") + key + "' must be finite");
  return v;
}

inline std::size_t count(const json& j, const char* key) {
  if (!j.is_number_integer() || j.get<long long>() < 1)
    throw ConfigError(std::string("config: '") + key + "' must be a positive integer");
  return j.get<std::size_t>();
}

inline bool flag(const json& j, const char* key) {
  if (!j.is_boolean()) throw ConfigError(std::string("config: '") + key + "' must be true or false");
  return j.get<bool>();
}

inline void only_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError("config: " + where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw ConfigError("config: unknown key '" + it.key() + "' in " + where);
}

inline KernelSpec parse_kernel(const json& k) {
  KernelSpec s;
  if (!k.contains("type") || !k["type"].is_string()) throw ConfigError("config: kernel.type missing");
  s.type = k["type"].get<std::string>();
  if (s.type == "sls") {
    only_keys(k, {"type", "k1", "k2", "eta2"}, "kernel");
    if (k.contains("k1")) s.sls.k1 = number(k["k1"], "kernel.k1");
    if (k.contains("k2")) s.sls.k2 = number(k["k2"], "kernel.k2");
    if (k.contains("eta2")) s.sls.eta2 = number(k["eta2"], "kernel.eta2");
    try {
      s.sls.validate();
    } catch (const ParameterError& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
  } else if (s.type == "fickian") {
    only_keys(k, {"type", "delta"}, "kernel");
    if (k.contains("delta")) s.delta = number(k["delta"], "kernel.delta");
    if (!(s.delta > 0.0)) throw ConfigError("config: kernel.delta must be positive");
  } else if (s.type == "custom_exp") {
    only_keys(k, {"type", "coeff", "rate", "e0"}, "kernel");
    if (!k.contains("coeff") || !k.contains("rate"))
      throw ConfigError("config: custom_exp kernel needs coeff and rate");
    s.coeff = number(k["coeff"], "kernel.coeff");
    s.rate = number(k["rate"], "kernel.rate");
    if (s.rate < 0.0) throw ConfigError("config: kernel.rate must be >= 0");
    if (k.contains("e0")) s.e0 = number(k["e0"], "kernel.e0");
  } else if (s.type == "modulus") {
    only_keys(k, {"type", "e0", "e_inf", "rate"}, "kernel");
    if (k.contains("e0")) s.modulus.e0 = number(k["e0"], "kernel.e0");
    if (k.contains("e_inf")) s.modulus.e_inf = number(k["e_inf"], "kernel.e_inf");
    if (k.contains("rate")) s.modulus.rate = number(k["rate"], "kernel.rate");
    try {
      s.modulus.validate();
    } catch (const ParameterError& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
  } else if (s.type == "none") {
    only_keys(k, {"type", "e0"}, "kernel");
    if (k.contains("e0")) s.e0 = number(k["e0"], "kernel.e0");
  } else {
    throw ConfigError("config: unknown kernel type '" + s.type + "'");
  }
  if (!(s.e0 > 0.0)) throw ConfigError("config: kernel.e0 must be positive");
  return s;
}

inline json kernel_json(const KernelSpec& s) {
  if (s.type == "sls") return {{"type", "sls"}, {"k1", s.sls.k1}, {"k2", s.sls.k2}, {"eta2", s.sls.eta2}};
  if (s.type == "fickian") return {{"type", "fickian"}, {"delta", s.delta}};
  if (s.type == "custom_exp")
    return {{"type", "custom_exp"}, {"coeff", s.coeff}, {"rate", s.rate}, {"e0", s.e0}};
  if (s.type == "modulus")
    return {{"type", "modulus"}, {"e0", s.modulus.e0}, {"e_inf", s.modulus.e_inf}, {"rate", s.modulus.rate}};
  return {{"type", "none"}, {"e0", s.e0}};
}

}  // namespace detail

/// Applies "key=value" to a JSON document. Dotted keys address nested
/// objects (kernel.delta=0.02). Values are parsed as JSON when possible,
/// otherwise taken as strings.
inline void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override '" + assignment + "' is not of the form key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  json* node = &doc;
  std::stringstream path(key);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(path, part, '.')) parts.push_back(part);
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    json& child = (*node)[parts[i]];
    if (!child.is_object()) child = json::object();
    node = &child;
  }
  (*node)[parts.back()] = value;
}

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json doc = json::parse(in, nullptr, false, true);
  if (doc.is_discarded()) throw ConfigError("config file '" + path + "' is not valid JSON");
  return doc;
}

/// Validates a document into a StudyConfig. `long_protocol` switches to the
/// long experiment protocols (beam 5000 steps; laplace T = 4.5 with 3000 steps).
inline StudyConfig parse_config(const json& doc, bool long_protocol = false) {
  using detail::count;
  using detail::flag;
  using detail::number;
  if (!doc.is_object()) throw ConfigError("config: top level must be an object");
  if (!doc.contains("problem") || !doc["problem"].is_string())
    throw ConfigError("config: 'problem' must be \"beam\" or \"laplace\"");
  StudyConfig c;
  const std::string problem = doc["problem"].get<std::string>();
  const std::set<std::string> common = {"problem", "kernel", "T", "n_steps", "levels",
                                        "output_dir", "audit_history", "emit_svg",
                                        "estimate_constants", "n_ref_factor"};
  if (problem == "beam") {
    c.problem = Problem::beam;
    auto allowed = common;
    allowed.insert({"profile", "L", "d", "nu", "ks", "n_elements"});
    detail::only_keys(doc, allowed, "beam config");
    if (doc.contains("profile")) {
      const auto p = doc["profile"].get<std::string>();
      if (p == "joined") c.beam.profile = BeamProfile::joined;
      else if (p == "smooth") c.beam.profile = BeamProfile::smooth;
      else throw ConfigError("config: profile must be \"joined\" or \"smooth\"");
    }
    if (doc.contains("L")) c.beam.L = number(doc["L"], "L");
    if (doc.contains("d")) c.beam.d = number(doc["d"], "d");
    if (doc.contains("nu")) c.beam.nu = number(doc["nu"], "nu");
    if (doc.contains("ks")) c.beam.ks = number(doc["ks"], "ks");
    c.beam.validate();
    if (c.beam.profile == BeamProfile::smooth) c.kernel.type = "modulus";
    c.T = 15.0;
    c.n_steps = long_protocol ? 5000 : 1500;
    c.levels = {20, 40, 80, 160};
    if (doc.contains("n_elements")) c.levels = {count(doc["n_elements"], "n_elements")};
  } else if (problem == "laplace") {
    c.problem = Problem::laplace;
    auto allowed = common;
    allowed.insert({"delta", "m", "probe", "memory_form"});
    detail::only_keys(doc, allowed, "laplace config");
    c.kernel.type = "fickian";
    if (doc.contains("delta")) c.kernel.delta = number(doc["delta"], "delta");
    if (!(c.kernel.delta > 0.0)) throw ConfigError("config: delta must be positive");
    c.T = long_protocol ? 4.5 : 1.0;
    c.n_steps = long_protocol ? 3000 : 2000;
    c.levels = {8, 16, 32, 64};
    c.probe = std::array<double, 2>{0.5, 0.5};
    if (doc.contains("m")) c.levels = {count(doc["m"], "m")};
    if (doc.contains("probe")) {
      const auto& p = doc["probe"];
      if (p.is_null()) {
        c.probe.reset();
      } else {
        if (!p.is_array() || p.size() != 2) throw ConfigError("config: probe must be [x, y]");
        c.probe = std::array<double, 2>{number(p[0], "probe[0]"), number(p[1], "probe[1]")};
        for (double v : *c.probe)
          if (v < 0.0 || v > 1.0) throw ConfigError("config: probe point outside the unit square");
      }
    }
    if (doc.contains("memory_form")) {
      const auto f = doc["memory_form"].get<std::string>();
      if (f == "pde") c.memory_form = MemoryForm::pde;
      else if (f == "mixed_verbatim") c.memory_form = MemoryForm::mixed_verbatim;
      else throw ConfigError("config: memory_form must be \"pde\" or \"mixed_verbatim\"");
    }
  } else {
    throw ConfigError("config: unknown problem '" + problem + "'");
  }

  if (doc.contains("kernel")) {
    c.kernel = detail::parse_kernel(doc["kernel"]);
    if (c.problem == Problem::laplace && doc.contains("delta") && c.kernel.type == "fickian" &&
        !doc["kernel"].contains("delta"))
      c.kernel.delta = number(doc["delta"], "delta");
  }
  if (c.problem == Problem::laplace &&
      (c.kernel.type == "sls" || c.kernel.type == "modulus"))
    throw ConfigError("config: the laplace problem takes fickian, custom_exp or none kernels");

  if (!long_protocol) {
    if (doc.contains("T")) c.T = number(doc["T"], "T");
    if (doc.contains("n_steps")) c.n_steps = count(doc["n_steps"], "n_steps");
  }
  if (!(c.T > 0.0)) throw ConfigError("config: T must be positive");
  if (doc.contains("levels")) {
    if (doc.contains("n_elements") || doc.contains("m"))
      throw ConfigError("config: give either 'levels' or a single mesh size, not both");
    const auto& l = doc["levels"];
    if (!l.is_array() || l.empty()) throw ConfigError("config: levels must be a non-empty array");
    c.levels.clear();
    for (const auto& v : l) c.levels.push_back(count(v, "levels[]"));
  }
  for (std::size_t i = 1; i < c.levels.size(); ++i)
    if (c.levels[i] <= c.levels[i - 1])
      throw ConfigError("config: levels must be strictly refining (increasing)");
  if (c.problem == Problem::beam && c.beam.profile == BeamProfile::joined)
    for (auto n : c.levels)
      if (n % 2 != 0)
        throw ConfigError("config: joined beams need an even element count (got " +
                          std::to_string(n) + ")");
  if (doc.contains("n_ref_factor")) c.n_ref_factor = count(doc["n_ref_factor"], "n_ref_factor");
  if (c.n_ref_factor < 8) throw ConfigError("config: n_ref_factor must be >= 8");
  if (doc.contains("output_dir")) {
    if (!doc["output_dir"].is_string()) throw ConfigError("config: output_dir must be a string");
    c.output_dir = doc["output_dir"].get<std::string>();
  }
  if (doc.contains("audit_history")) c.audit_history = flag(doc["audit_history"], "audit_history");
  if (doc.contains("emit_svg")) c.emit_svg = flag(doc["emit_svg"], "emit_svg");
  if (doc.contains("estimate_constants"))
    c.estimate_constants = flag(doc["estimate_constants"], "estimate_constants");

  json can = {{"problem", problem},
              {"kernel", detail::kernel_json(c.kernel)},
              {"T", c.T},
              {"n_steps", c.n_steps},
              {"levels", c.levels},
              {"audit_history", c.audit_history},
              {"n_ref_factor", c.n_ref_factor}};
  if (c.problem == Problem::beam) {
    can["profile"] = c.beam.profile == BeamProfile::joined ? "joined" : "smooth";
    can["L"] = c.beam.L;
    can["d"] = c.beam.d;
    can["nu"] = c.beam.nu;
    can["ks"] = c.beam.ks;
  } else {
    can["memory_form"] = c.memory_form == MemoryForm::pde ? "pde" : "mixed_verbatim";
    can["probe"] = c.probe ? json(std::vector<double>{(*c.probe)[0], (*c.probe)[1]}) : json(nullptr);
  }
  c.canonical = can;
  return c;
}

/// 64-bit FNV-1a of the canonical JSON text.
inline std::string config_hash(const StudyConfig& c) {
  const std::string text = c.canonical.dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Memory kernel attached to the discrete system and E(0) for load scaling.
struct ResolvedKernel {
  std::optional<MemoryKernel> kernel;  // physical kernel k
  double e0 = 1.0;
};

inline ResolvedKernel resolve_kernel(const KernelSpec& s) {
  if (s.type == "sls") return {beam_kernel(s.sls), s.sls.k1};
  if (s.type == "modulus") return {beam_kernel(s.modulus), s.modulus.e0};
  if (s.type == "fickian") return {fickian_kernel(s.delta), 1.0};
  if (s.type == "custom_exp") return {MemoryKernel::exp_convolution(s.coeff, s.rate), s.e0};
  return {std::nullopt, s.e0};
}

}  // namespace vmix
