// Scenario files in, report files out. Both are JSON documents carrying a
// versioned "schema" field.
#pragma once

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ifsb/bayes.hpp"
#include "ifsb/error.hpp"
#include "ifsb/ifs.hpp"
#include "ifsb/scenario.hpp"
#include "ifsb/spaces.hpp"
#include "ifsb/transfer.hpp"

namespace ifsb::io {

using json = nlohmann::ordered_json;

inline constexpr const char* kScenarioSchema = "ifsb-scenario/1";
inline constexpr const char* kReportSchema = "ifsb-report/1";
/// Tables with more entries than this are summarized in reports.
inline constexpr std::size_t kInlineTableLimit = 10000;

// ---------------------------------------------------------------------------
// Scenario parsing.

namespace detail {

[[noreturn]] inline void fail(const std::string& where, const std::string& msg) {
  throw ScenarioError(where + ": " + msg);
}

inline const json& need(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) fail(where, std::string("missing key '") + key + "'");
  return j.at(key);
}

inline double number(const json& j, const std::string& where) {
  if (!j.is_number()) fail(where, "expected a number");
  return j.get<double>();
}

inline std::vector<double> numbers(const json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected an array of numbers");
  std::vector<double> v;
  v.reserve(j.size());
  for (const auto& x : j) v.push_back(number(x, where));
  return v;
}

/// Row-major matrix from an array of rows.
inline std::vector<double> matrix(const json& j, std::size_t rows, std::size_t cols, const std::string& where) {
  if (!j.is_array() || j.size() != rows)
    fail(where, "expected " + std::to_string(rows) + " rows");
  std::vector<double> out;
  out.reserve(rows * cols);
  for (const auto& r : j) {
    auto row = numbers(r, where);
    if (row.size() != cols) fail(where, "expected " + std::to_string(cols) + " columns per row");
    out.insert(out.end(), row.begin(), row.end());
  }
  return out;
}

inline std::size_t atom(const SampleSpace& s, const json& j, const std::string& where) {
  if (j.is_string()) {
    try {
      return s.index_of(j.get<std::string>());
    } catch (const ScenarioError&) {
      fail(where, "unknown atom '" + j.get<std::string>() + "'");
    }
  }
  fail(where, "atoms are referenced by label");
}

inline SpacePtr parse_space(const json& j, const std::string& where) {
  if (!j.is_object()) fail(where, "expected an object");
  const std::string kind = need(j, "kind", where).get<std::string>();
  if (kind == "grid") {
    const double lo = number(need(j, "lo", where), where), hi = number(need(j, "hi", where), where);
    const auto nodes = need(j, "nodes", where).get<std::size_t>();
    if (j.contains("base")) fail(where, "grid spaces carry their own quadrature weights");
    return share(SampleSpace::grid(lo, hi, nodes));
  }
  if (kind == "words") {
    const int d = need(j, "alphabet", where).get<int>(), k = need(j, "length", where).get<int>();
    if (j.contains("base")) fail(where, "word spaces use counting measure");
    return share(SampleSpace::cylinder_words(d, k));
  }
  if (kind != "finite") fail(where, "unknown space kind '" + kind + "'");
  std::vector<std::string> labels;
  if (j.contains("atoms")) {
    if (!j.at("atoms").is_array()) fail(where, "atoms must be an array of labels");
    for (const auto& a : j.at("atoms")) {
      if (!a.is_string()) fail(where, "atom labels must be strings");
      labels.push_back(a.get<std::string>());
    }
  } else {
    const auto n = need(j, "size", where).get<std::size_t>();
    for (std::size_t i = 1; i <= n; ++i) labels.push_back(std::to_string(i));
  }
  if (!j.contains("base") || j.at("base") == "counting") return share(SampleSpace::counting(std::move(labels)));
  const json& b = j.at("base");
  if (b == "uniform-probability") {
    const std::size_t n = labels.size();
    return share(SampleSpace::finite(std::move(labels), std::vector<double>(n, 1.0 / static_cast<double>(n))));
  }
  return share(SampleSpace::finite(std::move(labels), numbers(b, where + ".base")));
}

inline DensityFn parse_prior(const json& j, const SpacePtr& theta) {
  const std::string where = "prior";
  if (j == "uniform") return DensityFn::constant(theta, 1.0 / theta->total_weight());
  if (!j.is_object()) fail(where, "expected \"uniform\" or an object");
  if (j.contains("constant")) return DensityFn::constant(theta, number(j.at("constant"), where));
  if (j.contains("weights")) return DensityFn(theta, numbers(j.at("weights"), where));
  if (j.contains("beta")) {
    if (theta->kind() != SpaceKind::Grid) fail(where, "beta prior needs a grid parameter space");
    const json& b = j.at("beta");
    const double a = number(need(b, "a", where), where), c = number(need(b, "b", where), where);
    std::vector<double> logd(theta->size()), terms(theta->size());
    for (std::size_t i = 0; i < theta->size(); ++i) {
      const double t = theta->node(i);
      logd[i] = (a - 1) * std::log(t) + (c - 1) * std::log1p(-t);
      terms[i] = logd[i] + std::log(theta->base_weight(i));
    }
    const double z = log_sum_exp(std::span<const double>(terms));
    for (double& v : logd) v = std::exp(v - z);
    return DensityFn(theta, std::move(logd));
  }
  fail(where, "unknown prior form");
}

inline LossFn parse_loss(const json& j, const SpacePtr& theta, const SpacePtr& y) {
  const std::string where = "loss";
  if (!j.is_object()) fail(where, "expected an object");
  const std::size_t nt = theta->size(), ny = y->size();
  if (j.contains("table")) return LossFn::from_values(theta, y, matrix(j.at("table"), nt, ny, where + ".table"));
  if (j.contains("log_constant"))
    return LossFn::from_log_values(theta, y, std::vector<double>(nt * ny, number(j.at("log_constant"), where)));
  if (j.contains("log_table"))
    return LossFn::from_log_values(theta, y, matrix(j.at("log_table"), nt, ny, where + ".log_table"));
  if (j.contains("potential")) {
    const json& p = j.at("potential");
    const int k = need(p, "memory", where).get<int>();
    if (y->kind() != SpaceKind::CylinderWords || y->word_length() != k ||
        static_cast<std::size_t>(y->alphabet()) != nt)
      fail(where, "potential needs word data of length `memory` over the parameter alphabet");
    auto v = numbers(need(p, "values", where), where + ".potential.values");
    if (v.size() != ny) fail(where, "potential needs one value per word");
    const IfsMap pre = IfsMap::prepend(theta, y);
    std::vector<double> logl(nt * ny);
    for (std::size_t a = 0; a < nt; ++a)
      for (std::size_t w = 0; w < ny; ++w) logl[a * ny + w] = v[pre.target(a, w)];
    return LossFn::from_log_values(theta, y, std::move(logl));
  }
  if (j.contains("bernoulli_counts")) {
    const json& b = j.at("bernoulli_counts");
    if (theta->kind() != SpaceKind::Grid || theta->lo() < 0 || theta->hi() > 1)
      fail(where, "bernoulli_counts needs a grid parameter space inside [0,1]");
    const double draws = number(need(b, "draws", where), where);
    auto zeros = numbers(need(b, "zeros", where), where + ".bernoulli_counts.zeros");
    if (zeros.size() != ny) fail(where, "bernoulli_counts needs one zero count per data atom");
    std::vector<double> logl(nt * ny);
    for (std::size_t a = 0; a < nt; ++a) {
      const double t = theta->node(a);
      for (std::size_t w = 0; w < ny; ++w)
        logl[a * ny + w] = zeros[w] * std::log(t) + (draws - zeros[w]) * std::log1p(-t);
    }
    return LossFn::from_log_values(theta, y, std::move(logl));
  }
  fail(where, "unknown loss form");
}

inline IfsMap parse_ifs(const json& j, const SpacePtr& theta, const SpacePtr& y) {
  const std::string where = "ifs";
  if (j == "identity") return make_identity(theta, y);
  if (j == "theta_select") return make_theta_select(theta, y);
  if (j == "prepend") return IfsMap::prepend(theta, y);
  if (!j.is_object()) fail(where, "unknown IFS form");
  if (j.contains("constant")) return make_constant(theta, y, atom(*y, j.at("constant"), where));
  if (j.contains("table")) {
    const json& t = j.at("table");
    if (!t.is_array() || t.size() != theta->size()) fail(where, "table needs one row per parameter atom");
    std::vector<std::size_t> targets;
    for (const auto& row : t) {
      if (!row.is_array() || row.size() != y->size()) fail(where, "table rows need one target per data atom");
      for (const auto& x : row) targets.push_back(atom(*y, x, where));
    }
    return IfsMap::table(theta, y, std::move(targets));
  }
  if (j.contains("contractive")) {
    const json& c = j.at("contractive");
    std::vector<std::pair<double, double>> maps;
    for (const auto& m : need(c, "maps", where)) {
      auto ab = numbers(m, where + ".maps");
      if (ab.size() != 2) fail(where, "affine maps are [a, b] pairs");
      maps.emplace_back(ab[0], ab[1]);
    }
    return IfsMap::affine(theta, y, std::move(maps), number(need(c, "gamma", where), where));
  }
  fail(where, "unknown IFS form");
}

}  // namespace detail

inline Scenario parse_scenario(const json& j) {
  using namespace detail;
  if (!j.is_object()) fail("scenario", "expected a JSON object");
  if (!j.contains("schema") || j.at("schema") != kScenarioSchema)
    fail("scenario", std::string("schema must be \"") + kScenarioSchema + "\"");
  try {
    const std::string name = j.value("name", std::string("scenario"));
    SpacePtr theta = parse_space(need(j, "theta_space", "scenario"), "theta_space");
    SpacePtr y = parse_space(need(j, "y_space", "scenario"), "y_space");
    DensityFn prior = parse_prior(j.value("prior", json("uniform")), theta);
    LossFn loss = parse_loss(need(j, "loss", "scenario"), theta, y);
    IfsMap ifs = parse_ifs(need(j, "ifs", "scenario"), theta, y);

    PsiChoice psi = PsiChoice::One;
    EigenOptions eo;
    const json norm = j.value("normalizer", json("canonical"));
    if (norm == "eigen") {
      psi = PsiChoice::Eigen;
    } else if (norm.is_object() && norm.contains("eigen")) {
      psi = PsiChoice::Eigen;
      const json& e = norm.at("eigen");
      eo.tol = e.value("tol", eo.tol);
      eo.max_iter = e.value("max_iter", eo.max_iter);
    } else if (norm != "canonical") {
      fail("normalizer", "expected \"canonical\", \"eigen\" or {\"eigen\": {...}}");
    }

    RhoChoice rho;
    const json r = j.value("rho", json("stationary"));
    if (r == "stationary") {
    } else if (r.is_object() && r.contains("dirac")) {
      rho = RhoChoice::make_dirac(atom(*y, r.at("dirac"), "rho"));
    } else if (r.is_object() && r.contains("weights")) {
      rho = RhoChoice::make_explicit(numbers(r.at("weights"), "rho.weights"));
    } else {
      fail("rho", "expected \"stationary\", {\"dirac\": label} or {\"weights\": [...]}");
    }

    Checks checks;
    const json c = j.value("checks", json("none"));
    if (c != "none") {
      if (!c.is_object()) fail("checks", "expected \"none\" or an object");
      if (c.contains("pressure")) {
        const json& p = c.at("pressure");
        checks.pressure = PressureCheck{need(p, "n_competitors", "checks.pressure").get<std::size_t>(),
                                        need(p, "seed", "checks.pressure").get<std::uint64_t>()};
      }
      if (c.contains("zellner"))
        checks.zellner = ZellnerCheck{atom(*y, need(c.at("zellner"), "y0", "checks.zellner"), "checks.zellner")};
    }

    PipelineConfig cfg{name, std::move(loss), std::move(prior), std::move(ifs), psi, std::move(rho)};
    cfg.eigen = eo;
    return Scenario{std::move(cfg), std::move(checks)};
  } catch (const json::exception& e) {
    fail("scenario", e.what());
  }
}

inline Scenario parse_scenario_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ScenarioError(std::string("scenario is not valid JSON: ") + e.what());
  }
  return parse_scenario(j);
}

inline Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioError("cannot read scenario file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario_text(ss.str());
}

// ---------------------------------------------------------------------------
// Reports.

/// Non-finite numbers become strings so the document stays valid JSON.
inline json num(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

inline std::uint64_t fnv1a(std::span<const double> xs) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double x : xs) {
    std::uint64_t bits;
    std::memcpy(&bits, &x, sizeof bits);
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// A named table of rows×cols doubles, row-major.
struct Table {
  std::string name;
  std::size_t rows = 1, cols = 0;
  std::vector<double> values;
};

inline json table_json(const Table& t) {
  json out;
  if (t.rows > 1) {
    out["rows"] = t.rows;
    out["cols"] = t.cols;
  }
  if (t.values.size() <= kInlineTableLimit) {
    json v = json::array();
    if (t.rows > 1) {
      for (std::size_t r = 0; r < t.rows; ++r) {
        json row = json::array();
        for (std::size_t c = 0; c < t.cols; ++c) row.push_back(num(t.values[r * t.cols + c]));
        v.push_back(std::move(row));
      }
    } else {
      for (double x : t.values) v.push_back(num(x));
    }
    out["values"] = std::move(v);
    return out;
  }
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double x : t.values) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  out["summary"] = {{"count", t.values.size()},
                    {"min", num(lo)},
                    {"max", num(hi)},
                    {"sum", num(compensated_sum(t.values))},
                    {"checksum", "fnv1a64:" + hex64(fnv1a(t.values))}};
  return out;
}

inline json space_json(const SampleSpace& s) {
  json out;
  switch (s.kind()) {
    case SpaceKind::Finite: out["kind"] = "finite"; break;
    case SpaceKind::CylinderWords:
      out["kind"] = "words";
      out["alphabet"] = s.alphabet();
      out["length"] = s.word_length();
      break;
    case SpaceKind::Grid:
      out["kind"] = "grid";
      out["lo"] = s.lo();
      out["hi"] = s.hi();
      out["spacing"] = s.spacing();
      break;
  }
  out["size"] = s.size();
  if (s.kind() != SpaceKind::Grid && s.size() <= kInlineTableLimit) out["atoms"] = s.labels();
  out["base_total"] = num(s.total_weight());
  return out;
}

/// Every table the report mentions, for --dump-tables.
inline std::vector<Table> report_tables(const Scenario& sc, const ScenarioOutcome& o) {
  const auto& rep = o.report;
  const std::size_t nt = sc.config.loss.theta_size(), ny = sc.config.loss.y_size();
  auto vec = [](std::span<const double> s) { return std::vector<double>(s.begin(), s.end()); };
  std::vector<Table> t;
  t.push_back({"prior", 1, nt, vec(sc.config.prior.values())});
  t.push_back({"nu", 1, nt, vec(rep.nu.masses())});
  t.push_back({"loss", nt, ny, vec(sc.config.loss.values())});
  t.push_back({"phi", 1, ny, vec(rep.pair.phi.values())});
  t.push_back({"psi", 1, ny, vec(rep.pair.psi.values())});
  t.push_back({"jacobian", nt, ny, rep.jacobian.values});
  t.push_back({"rho", 1, ny, vec(rep.rho.masses())});
  t.push_back({"kernel", nt, ny, rep.kernel});
  t.push_back({"mean_density", 1, nt, rep.mean_density});
  t.push_back({"nu_p", 1, nt, vec(rep.theta_marginal.masses())});
  t.push_back({"joint", nt, ny, rep.joint.masses()});
  if (o.scan) t.push_back({"competitor_pressure", 1, o.scan->competitor_values.size(), o.scan->competitor_values});
  return t;
}

inline json report_json(const Scenario& sc, const ScenarioOutcome& o) {
  const auto& rep = o.report;
  const auto tables = report_tables(sc, o);
  auto tab = [&](const char* name) {
    for (const auto& t : tables)
      if (t.name == name) return table_json(t);
    return json();
  };

  json r;
  r["schema"] = kReportSchema;
  r["scenario"] = sc.config.name;
  r["inputs"] = rep.inputs_digest;
  r["spaces"] = {{"theta", space_json(*sc.config.loss.theta_space())},
                 {"y", space_json(*sc.config.loss.y_space())}};
  r["prior"] = {{"pi_a", tab("prior")}, {"nu", tab("nu")}, {"loss", tab("loss")}};

  json inter;
  inter["normalizer"] = to_string(rep.pair.kind);
  if (rep.pair.lambda) inter["lambda"] = num(*rep.pair.lambda);
  inter["phi"] = tab("phi");
  inter["psi"] = tab("psi");
  inter["jacobian"] = tab("jacobian");
  inter["rho"] = tab("rho");
  r["intermediate"] = std::move(inter);

  r["posterior"] = {{"joint", tab("joint")},
                    {"kernel", tab("kernel")},
                    {"nu_p", tab("nu_p")},
                    {"mean_density", tab("mean_density")}};

  const auto& d = rep.diagnostics;
  json diag;
  diag["eigen_iterations"] = d.eigen_iterations;
  diag["eigen_residual"] = num(d.eigen_residual);
  diag["stationary_iterations"] = d.stationary_iterations;
  diag["stationary_residual"] = num(d.stationary_residual);
  diag["rho_stationary"] = d.rho_stationary;
  diag["rho_non_unique"] = d.rho_non_unique;
  diag["jacobian_residual"] = num(d.jacobian_residual);
  diag["holonomy_residual"] = num(rep.joint.holonomy_residual);
  diag["joint_total"] = num(rep.joint.total_mass());
  diag["nu_p_total"] = num(rep.theta_marginal.total());
  diag["rho_total"] = num(rep.rho.total());
  r["diagnostics"] = std::move(diag);

  json checks = json::object();
  if (o.posterior_pressure) {
    const auto& p = *o.posterior_pressure;
    checks["posterior_pressure"] = {{"integral_log_l", num(p.integral_log_l)},
                                    {"integral_log_prior", num(p.integral_log_prior)},
                                    {"integral_log_phi", num(p.integral_log_phi)},
                                    {"entropy", p.entropy.minus_infinity ? json("-inf") : num(p.entropy.value)},
                                    {"total", num(p.total)}};
  }
  if (o.scan) {
    checks["pressure_scan"] = {{"n_competitors", o.scan->competitors},
                               {"seed", sc.checks.pressure->seed},
                               {"posterior", num(o.scan->posterior_value)},
                               {"max_competitor", num(o.scan->max_competitor)},
                               {"margin", num(o.scan->margin)},
                               {"violations", o.scan->violations},
                               {"competitors", tab("competitor_pressure")}};
  }
  if (o.zellner) {
    json z = {{"y0", sc.config.loss.y_space()->label(o.zellner->y0)},
              {"at_posterior", num(o.zellner->at_posterior)}};
    if (o.zellner->at_prior) z["at_prior"] = num(*o.zellner->at_prior);
    checks["zellner"] = std::move(z);
  }
  checks["failures"] = o.failures;
  checks["passed"] = o.failures.empty();
  r["checks"] = std::move(checks);

  r["tolerances"] = {{"probability", Tolerances::probability},
                     {"holonomy", Tolerances::holonomy},
                     {"zero_pressure", Tolerances::zero_pressure},
                     {"supremum_slack", Tolerances::supremum_slack},
                     {"zellner_zero", Tolerances::zellner_zero}};
  return r;
}

inline std::string report_text(const Scenario& sc, const ScenarioOutcome& o) {
  return report_json(sc, o).dump(2) + "\n";
}

/// Writes `text` to a sibling temp file and renames it over `path`.
inline void write_atomically(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << text;
    out.flush();
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error("cannot move report into place at " + path.string() + ": " + ec.message());
  }
}

inline std::string table_csv(const Table& t) {
  std::string out;
  char buf[32];
  for (std::size_t r = 0; r < t.rows; ++r) {
    for (std::size_t c = 0; c < t.cols; ++c) {
      if (c) out += ',';
      std::snprintf(buf, sizeof buf, "%.17g", t.values[r * t.cols + c]);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

/// Writes every report table as `<prefix>.<table>.csv`; returns the paths.
inline std::vector<std::filesystem::path> dump_tables(const Scenario& sc, const ScenarioOutcome& o,
                                                      const std::filesystem::path& prefix) {
  std::vector<std::filesystem::path> paths;
  for (const auto& t : report_tables(sc, o)) {
    std::filesystem::path p = prefix;
    p += "." + t.name + ".csv";
    write_atomically(p, table_csv(t));
    paths.push_back(std::move(p));
  }
  return paths;
}

}  // namespace ifsb::io
