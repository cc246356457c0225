#include "todasurf/run.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <vector>

#include "json.hpp"  // vendored single-header JSON library

#include "todasurf/errors.hpp"
#include "todasurf/geometry.hpp"
#include "todasurf/toda.hpp"
#include "todasurf/transport.hpp"

namespace todasurf {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

bool name_char(char ch, bool first) {
  if (ch == '_' || (ch >= 'a' && ch <= 'z')) return true;
  return !first && ch >= '0' && ch <= '9';
}

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

/// Validates a section/key name; returns the 0-based offset of the first bad
/// character, or -1 if the name is well formed.
int bad_name_at(const std::string& name) {
  if (name.empty()) return 0;
  for (size_t i = 0; i < name.size(); ++i)
    if (!name_char(name[i], i == 0)) return static_cast<int>(i);
  return -1;
}

}  // namespace

RawConfig parse_ini(const std::string& text) {
  RawConfig cfg;
  std::istringstream in(text);
  std::string raw_line, section;
  int line_no = 0;
  while (std::getline(in, raw_line)) {
    ++line_no;
    std::string line = trim(raw_line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;

    size_t indent = raw_line.find_first_not_of(" \t");
    int col0 = static_cast<int>(indent == std::string::npos ? 0 : indent) + 1;

    if (line.front() == '[') {
      if (line.back() != ']')
        throw ParseError("section header missing closing ']'", line_no,
                         col0 + static_cast<int>(line.size()) - 1);
      std::string name = trim(line.substr(1, line.size() - 2));
      int bad = bad_name_at(name);
      if (bad >= 0)
        throw ParseError("invalid section name '" + name + "'", line_no, col0 + 1 + bad);
      section = name;
      continue;
    }

    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("expected 'key = value' or '[section]'", line_no, col0);
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    int bad = bad_name_at(key);
    if (bad >= 0) throw ParseError("invalid key '" + key + "'", line_no, col0 + bad);
    if (section.empty())
      throw ParseError("key '" + key + "' appears before any [section]", line_no, col0);
    if (value.empty())
      throw ParseError("empty value for key '" + key + "'", line_no,
                       col0 + static_cast<int>(eq) + 1);

    std::string full = section + "." + key;
    if (cfg.entries.count(full))
      throw ParseError("duplicate key '" + full + "' (first at line " +
                           std::to_string(cfg.entries[full].line) + ")",
                       line_no, col0);
    cfg.entries[full] = {value, line_no};
  }
  return cfg;
}

RawConfig load_ini(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_ini(buf.str());
}

void apply_override(RawConfig& cfg, const std::string& assignment) {
  size_t eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ParseError("override '" + assignment + "' is not of the form section.key=value");
  std::string key = trim(assignment.substr(0, eq));
  std::string value = trim(assignment.substr(eq + 1));
  size_t dot = key.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == key.size())
    throw ParseError("override key '" + key + "' is not of the form section.key");
  std::string section = key.substr(0, dot), name = key.substr(dot + 1);
  if (bad_name_at(section) >= 0 || bad_name_at(name) >= 0)
    throw ParseError("override key '" + key + "' contains invalid characters");
  if (value.empty()) throw ParseError("override '" + key + "' has an empty value");
  cfg.entries[key] = {value, -1};
}

const std::map<std::string, double>& default_check_tolerances() {
  static const std::map<std::string, double> defaults = {
      {"field_eq", 1e-8},
      {"zero_curvature", 1e-8},
      {"gcr", 1e-4},
      {"gauge_invariance", 1e-9},
      {"appendix_christoffel", 1e-5},
  };
  return defaults;
}

namespace {

double to_double(const RawConfig::Entry& e, const std::string& key) {
  const char* begin = e.value.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0' || !std::isfinite(v))
    throw ParseError("value for '" + key + "' is not a finite real number: '" +
                         e.value + "'",
                     e.line);
  return v;
}

int to_int(const RawConfig::Entry& e, const std::string& key) {
  int v = 0;
  auto [p, ec] = std::from_chars(e.value.data(), e.value.data() + e.value.size(), v);
  if (ec != std::errc{} || p != e.value.data() + e.value.size())
    throw ParseError("value for '" + key + "' is not an integer: '" + e.value + "'",
                     e.line);
  return v;
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::istringstream in(value);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

[[noreturn]] void fail(const std::string& msg, const RawConfig& raw,
                       const std::string& key) {
  int line = raw.has(key) ? raw.entries.at(key).line : -1;
  throw ParseError(msg, line);
}

}  // namespace

RunConfig make_run_config(const RawConfig& raw) {
  RunConfig cfg;
  for (const auto& [name, tol] : default_check_tolerances())
    cfg.checks[name] = {true, tol};

  for (const auto& [key, entry] : raw.entries) {
    size_t dot = key.find('.');
    std::string section = key.substr(0, dot), name = key.substr(dot + 1);

    if (section == "algebra") {
      if (name == "family") cfg.family = entry.value;
      else if (name == "n") cfg.n = to_int(entry, key);
      else if (name == "alpha_sq") cfg.alpha_sq = to_double(entry, key);
      else throw ParseError("unknown key '" + key + "'", entry.line);
    } else if (section == "model") {
      if (name == "mu_plus") cfg.mu_plus = to_double(entry, key);
      else if (name == "mu_minus") cfg.mu_minus = to_double(entry, key);
      else if (name == "c") cfg.c = to_double(entry, key);
      else if (name == "lambda") cfg.lambda = to_double(entry, key);
      else throw ParseError("unknown key '" + key + "'", entry.line);
    } else if (section == "solution") {
      if (name == "type") {
        if (entry.value == "builtin") cfg.kind = SolutionKind::builtin;
        else if (entry.value == "grid") cfg.kind = SolutionKind::grid_file;
        else if (entry.value == "goursat") cfg.kind = SolutionKind::goursat;
        else
          throw ParseError("solution.type must be builtin, grid, or goursat; got '" +
                               entry.value + "'",
                           entry.line);
      } else if (name == "name") cfg.name = entry.value;
      else if (name == "file") cfg.file = entry.value;
      else if (name == "step") cfg.goursat_step = to_double(entry, key);
      else cfg.params[name] = to_double(entry, key);
    } else if (section == "grid") {
      if (name == "z_min") cfg.window.z_min = to_double(entry, key);
      else if (name == "z_max") cfg.window.z_max = to_double(entry, key);
      else if (name == "zbar_min") cfg.window.zbar_min = to_double(entry, key);
      else if (name == "zbar_max") cfg.window.zbar_max = to_double(entry, key);
      else if (name == "nz") cfg.nz = to_int(entry, key);
      else if (name == "nzbar") cfg.nzbar = to_int(entry, key);
      else if (name == "fd_step") cfg.fd_step = to_double(entry, key);
      else if (name == "transport_step") cfg.transport_step = to_double(entry, key);
      else throw ParseError("unknown key '" + key + "'", entry.line);
    } else if (section == "output") {
      if (name == "forms_csv") cfg.forms_csv = entry.value;
      else if (name == "immersion_csv") cfg.immersion_csv = entry.value;
      else if (name == "report_json") cfg.report_json = entry.value;
      else throw ParseError("unknown key '" + key + "'", entry.line);
    } else if (section == "checks") {
      if (name == "enable") {
        for (auto& [cname, spec] : cfg.checks) spec.enabled = false;
        if (entry.value != "none") {
          for (const std::string& item : split_list(entry.value)) {
            if (item == "all") {
              for (auto& [cname, spec] : cfg.checks) spec.enabled = true;
            } else if (cfg.checks.count(item)) {
              cfg.checks[item].enabled = true;
            } else {
              throw ParseError("unknown check '" + item + "'", entry.line);
            }
          }
        }
      } else if (name.rfind("tol_", 0) == 0) {
        std::string cname = name.substr(4);
        if (!cfg.checks.count(cname))
          throw ParseError("unknown check tolerance '" + key + "'", entry.line);
        cfg.checks[cname].tolerance = to_double(entry, key);
      } else if (name == "stride") cfg.stride = to_int(entry, key);
      else if (name == "max_quarantine_fraction")
        cfg.max_quarantine_fraction = to_double(entry, key);
      else throw ParseError("unknown key '" + key + "'", entry.line);
    } else {
      throw ParseError("unknown section '" + section + "'", entry.line);
    }
  }

  // Invariants.
  if (cfg.family != "sl") fail("algebra.family must be 'sl'", raw, "algebra.family");
  if (cfg.n < 2 || cfg.n > 3) fail("algebra.n must be 2 or 3", raw, "algebra.n");
  if (!(cfg.alpha_sq > 0))
    fail("algebra.alpha_sq must be positive", raw, "algebra.alpha_sq");
  if (cfg.c == 0.0) fail("model.c must be nonzero", raw, "model.c");
  if (cfg.mu_plus == 0.0) fail("model.mu_plus must be nonzero", raw, "model.mu_plus");
  if (cfg.mu_minus == 0.0)
    fail("model.mu_minus must be nonzero", raw, "model.mu_minus");
  if (cfg.nz < 2) fail("grid.nz must be at least 2", raw, "grid.nz");
  if (cfg.nzbar < 2) fail("grid.nzbar must be at least 2", raw, "grid.nzbar");
  if (!(cfg.fd_step > 0)) fail("grid.fd_step must be positive", raw, "grid.fd_step");
  if (!(cfg.transport_step > 0))
    fail("grid.transport_step must be positive", raw, "grid.transport_step");
  if (!(cfg.window.z_span() > 0))
    fail("grid.z_max must exceed grid.z_min", raw, "grid.z_max");
  if (!(cfg.window.zbar_span() > 0))
    fail("grid.zbar_max must exceed grid.zbar_min", raw, "grid.zbar_max");
  if (!(cfg.goursat_step > 0))
    fail("solution.step must be positive", raw, "solution.step");
  if (cfg.stride < 1) fail("checks.stride must be at least 1", raw, "checks.stride");
  if (cfg.max_quarantine_fraction < 0 || cfg.max_quarantine_fraction > 1)
    fail("checks.max_quarantine_fraction must lie in [0, 1]", raw,
         "checks.max_quarantine_fraction");
  if (cfg.kind == SolutionKind::grid_file && cfg.file.empty())
    fail("solution.file is required when solution.type = grid", raw, "solution.type");
  return cfg;
}

namespace {

/// Everything computed at one sweep node; NaN marks values a quarantined point
/// never reached.
struct PointRecord {
  double z = 0, zbar = 0;
  double g12 = kNan;
  double k_closed = kNan, k_fd = kNan, k_gauss = kNan;
  std::vector<double> b_flat;   ///< 3 per normal direction: b_11, b_12, b_22
  std::vector<double> mu_flat;  ///< per B<A pair: mu_..._1, mu_..._2
  double resid_field = kNan, resid_zc = kNan;
  double resid_gauss = kNan, resid_codazzi = kNan, resid_ricci = kNan;
  double christoffel_dev = kNan;  ///< report-only
  double gauge_dev = kNan;        ///< report-only
  int nu_perp = -1;
  std::vector<int> eta;
  bool quarantined = false;
};

struct Accumulator {
  double max_value = kNan;
  long evaluated = 0;

  void add(double v) {
    if (!std::isfinite(v)) return;
    ++evaluated;
    if (std::isnan(max_value) || v > max_value) max_value = v;
  }
};

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("TODASURF_THREADS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

void probe_writable(const std::string& path) {
  if (path.empty()) return;
  std::ofstream f(path, std::ios::app);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
}

nlohmann::ordered_json finite_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

}  // namespace

RunOutcome run_batch(const RunConfig& cfg, const RunOptions& options) {
  const int rank = cfg.n - 1;
  SlAlgebra sl = build_sl(cfg.n, cfg.alpha_sq);
  TodaModel model = make_sl_toda(sl, cfg.mu_plus, cfg.mu_minus, cfg.c, cfg.lambda);
  const LieAlgebra& g = *model.algebra;

  // Resolve the field configuration; stencils reach 2*fd_step past the window.
  const double margin = 4.0 * cfg.fd_step;
  Domain extended{cfg.window.z_min - margin, cfg.window.z_max + margin,
                  cfg.window.zbar_min - margin, cfg.window.zbar_max + margin};
  FieldConfig fields;
  switch (cfg.kind) {
    case SolutionKind::builtin: {
      std::map<std::string, double> params = cfg.params;
      params["z_min"] = extended.z_min;
      params["z_max"] = extended.z_max;
      params["zbar_min"] = extended.zbar_min;
      params["zbar_max"] = extended.zbar_max;
      fields = exact_solution(cfg.name, rank, params);
      break;
    }
    case SolutionKind::grid_file: {
      GridData data = load_grid_csv(cfg.file);
      fields = FieldConfig::grid(std::move(data), cfg.file);
      if (fields.n_fields() != rank)
        throw std::runtime_error("grid file '" + cfg.file + "' holds " +
                                 std::to_string(fields.n_fields()) +
                                 " fields but the model needs " +
                                 std::to_string(rank));
      const Domain& have = fields.domain();
      double need = 2.5 * cfg.fd_step;
      if (!have.contains(cfg.window.z_min - need, cfg.window.zbar_min - need) ||
          !have.contains(cfg.window.z_max + need, cfg.window.zbar_max + need))
        throw std::runtime_error(
            "grid file domain is too small for the sweep window plus the "
            "finite-difference margin of " +
            std::to_string(need));
      break;
    }
    case SolutionKind::goursat: {
      std::map<std::string, double> params = cfg.params;
      params["z_min"] = extended.z_min;
      params["z_max"] = extended.z_max;
      params["zbar_min"] = extended.zbar_min;
      params["zbar_max"] = extended.zbar_max;
      FieldConfig edges = exact_solution(cfg.name, rank, params);
      auto on_z_min = [&edges, &extended](double w) {
        return edges.at(extended.z_min, w).phi;
      };
      auto on_zbar_min = [&edges, &extended](double z) {
        return edges.at(z, extended.zbar_min).phi;
      };
      GoursatResult solved =
          goursat_solve(model, on_z_min, on_zbar_min, extended, cfg.goursat_step);
      if (solved.truncated)
        throw std::runtime_error(
            "characteristic marching diverged before covering the window");
      fields = solved.fields;
      break;
    }
  }

  GridSpec sweep{cfg.window.z_min,
                 cfg.window.zbar_min,
                 cfg.window.z_span() / (cfg.nz - 1),
                 cfg.window.zbar_span() / (cfg.nzbar - 1),
                 cfg.nz,
                 cfg.nzbar};

  const int m_normals = g.dim() - 2;
  const bool want_gauge = cfg.checks.at("gauge_invariance").enabled;
  const bool want_christoffel = cfg.checks.at("appendix_christoffel").enabled;
  Vec gauge_x = Vec::Zero(g.dim());
  gauge_x += 0.3 * model.cartan_dirs[0];
  if (model.n_fields() > 1) gauge_x -= 0.17 * model.cartan_dirs[1];

  std::vector<PointRecord> records(static_cast<size_t>(cfg.nz) * cfg.nzbar);
  std::atomic<bool> fatal{false};
  std::mutex fatal_mutex;
  std::string fatal_message;

  auto eval_point = [&](int i, int j) {
    PointRecord& rec = records[static_cast<size_t>(i) * cfg.nzbar + j];
    double z = sweep.z(i), w = sweep.zbar(j);
    rec.z = z;
    rec.zbar = w;
    rec.b_flat.assign(static_cast<size_t>(3 * m_normals), kNan);
    rec.mu_flat.assign(static_cast<size_t>(m_normals * (m_normals - 1)), kNan);
    try {
      rec.resid_field = field_residual(model, fields, z, w).cwiseAbs().maxCoeff();
      rec.resid_zc =
          zero_curvature_residual(model, fields, z, w).cwiseAbs().maxCoeff();

      GaugeData gd = gauge_at(model, fields, z, w);
      Metric2 metric = induced_metric(model, gd);
      rec.g12 = metric.g(0, 1);
      if (metric.degenerate) {
        rec.quarantined = true;
        return;
      }

      NormalFrame frame = normal_frame(model, gd);
      rec.nu_perp = frame.nu_perp();
      rec.eta = frame.eta;

      rec.k_closed = gaussian_curvature(model, fields, z, w,
                                        CurvatureMode::closed_form, cfg.fd_step);
      rec.k_fd = gaussian_curvature(model, fields, z, w,
                                    CurvatureMode::finite_difference, cfg.fd_step);
      rec.k_gauss = gauss_equation_curvature(model, gd, frame);

      std::vector<Eigen::Matrix2d> b = second_form(model, gd, frame);
      for (int A = 0; A < m_normals; ++A) {
        rec.b_flat[static_cast<size_t>(3 * A) + 0] = b[A](0, 0);
        rec.b_flat[static_cast<size_t>(3 * A) + 1] = b[A](0, 1);
        rec.b_flat[static_cast<size_t>(3 * A) + 2] = b[A](1, 1);
      }
      if (m_normals > 1) {
        std::array<Mat, 2> mu =
            normal_connection(model, fields, z, w, frame, cfg.fd_step);
        size_t idx = 0;
        for (int B = 0; B < m_normals; ++B)
          for (int A = B + 1; A < m_normals; ++A) {
            rec.mu_flat[idx++] = mu[0](B, A);
            rec.mu_flat[idx++] = mu[1](B, A);
          }
      }

      GcrResiduals gcr = gcr_residuals(model, fields, z, w, cfg.fd_step);
      rec.resid_gauss = gcr.gauss;
      rec.resid_codazzi = gcr.codazzi;
      rec.resid_ricci = gcr.ricci;

      bool on_stride = (i % cfg.stride == 0) && (j % cfg.stride == 0);
      if (want_christoffel && on_stride) {
        Christoffel direct = christoffel_direct(model, gd);
        Christoffel metric_route =
            christoffel_metric(model, fields, z, w, cfg.fd_step);
        double dev = 0;
        for (size_t mu_i = 0; mu_i < 2; ++mu_i)
          dev = std::max(dev,
                         (direct[mu_i] - metric_route[mu_i]).cwiseAbs().maxCoeff());
        rec.christoffel_dev = dev;
      }
      if (want_gauge && on_stride)
        rec.gauge_dev =
            gauge_invariance_deviation(model, fields, z, w, gauge_x, cfg.fd_step);
    } catch (const std::domain_error&) {
      rec.quarantined = true;
    } catch (const std::runtime_error&) {
      rec.quarantined = true;
    }
  };

  int threads = std::min(resolve_threads(options.threads), cfg.nz);
  if (threads <= 1) {
    for (int i = 0; i < cfg.nz && !fatal; ++i)
      for (int j = 0; j < cfg.nzbar; ++j) eval_point(i, j);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(threads));
    std::atomic<int> next_row{0};
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        try {
          for (int i = next_row.fetch_add(1); i < cfg.nz && !fatal;
               i = next_row.fetch_add(1))
            for (int j = 0; j < cfg.nzbar; ++j) eval_point(i, j);
        } catch (const std::exception& e) {
          std::lock_guard<std::mutex> lock(fatal_mutex);
          if (!fatal) fatal_message = e.what();
          fatal = true;
        }
      });
    }
    for (auto& th : pool) th.join();
  }
  if (fatal) throw std::runtime_error("sweep failed: " + fatal_message);

  // Deterministic reduction in row-major order.
  std::map<std::string, Accumulator> acc;
  for (const char* name : {"field_eq", "zero_curvature", "gcr", "gauge_invariance",
                           "appendix_christoffel"})
    acc[name];
  std::vector<std::array<int, 2>> quarantined_points;
  const PointRecord* signature_sample = nullptr;
  for (int i = 0; i < cfg.nz; ++i)
    for (int j = 0; j < cfg.nzbar; ++j) {
      const PointRecord& rec = records[static_cast<size_t>(i) * cfg.nzbar + j];
      if (rec.quarantined) {
        quarantined_points.push_back({i, j});
        continue;
      }
      if (!signature_sample) signature_sample = &rec;
      acc["field_eq"].add(rec.resid_field);
      acc["zero_curvature"].add(rec.resid_zc);
      acc["gcr"].add(rec.resid_gauss);
      acc["gcr"].add(rec.resid_codazzi);
      acc["gcr"].add(rec.resid_ricci);
      acc["gauge_invariance"].add(rec.gauge_dev);
      acc["appendix_christoffel"].add(rec.christoffel_dev);
    }

  const long total_points = static_cast<long>(cfg.nz) * cfg.nzbar;
  const double quarantine_fraction =
      static_cast<double>(quarantined_points.size()) / total_points;
  const bool quarantine_pass = quarantine_fraction <= cfg.max_quarantine_fraction;

  bool all_pass = quarantine_pass;
  std::map<std::string, bool> check_pass;
  for (const auto& [name, spec] : cfg.checks) {
    const Accumulator& a = acc.at(name);
    bool pass = true;
    if (spec.enabled)
      pass = a.evaluated > 0 && std::isfinite(a.max_value) &&
             a.max_value <= spec.tolerance;
    check_pass[name] = pass;
    if (spec.enabled && !pass) all_pass = false;
  }

  // Artifacts: inputs are resolved and the sweep finished, so probe all output
  // paths, then write.
  const bool emit_csv = !options.check_only;
  if (emit_csv) {
    probe_writable(cfg.forms_csv);
    probe_writable(cfg.immersion_csv);
  }
  probe_writable(cfg.report_json);

  if (emit_csv && !cfg.forms_csv.empty()) {
    std::ofstream out(cfg.forms_csv);
    if (!out)
      throw std::runtime_error("cannot open '" + cfg.forms_csv + "' for writing");
    out << "z,zbar,g12,K_closed,K_fd,K_gauss";
    for (int A = 1; A <= m_normals; ++A)
      out << ",b_" << A << "_11,b_" << A << "_12,b_" << A << "_22";
    for (int B = 1; B <= m_normals; ++B)
      for (int A = B + 1; A <= m_normals; ++A)
        out << ",mu_" << B << A << "_1,mu_" << B << A << "_2";
    out << ",resid_field,resid_zc,resid_gauss,resid_codazzi,resid_ricci\n";
    for (const PointRecord& rec : records) {
      out << fmt(rec.z) << ',' << fmt(rec.zbar) << ',' << fmt(rec.g12) << ','
          << fmt(rec.k_closed) << ',' << fmt(rec.k_fd) << ',' << fmt(rec.k_gauss);
      for (double v : rec.b_flat) out << ',' << fmt(v);
      for (double v : rec.mu_flat) out << ',' << fmt(v);
      out << ',' << fmt(rec.resid_field) << ',' << fmt(rec.resid_zc) << ','
          << fmt(rec.resid_gauss) << ',' << fmt(rec.resid_codazzi) << ','
          << fmt(rec.resid_ricci) << '\n';
    }
  }

  nlohmann::ordered_json immersion_info;
  immersion_info["emitted"] = false;
  if (emit_csv && !cfg.immersion_csv.empty()) {
    ImmersionPatch patch = immersion_patch(model, fields, sweep, cfg.transport_step);
    KillingFrame ambient = orthonormal_basis(g, cfg.c);
    std::ofstream out(cfg.immersion_csv);
    if (!out)
      throw std::runtime_error("cannot open '" + cfg.immersion_csv +
                               "' for writing");
    out << "z,zbar";
    for (int k = 1; k <= g.dim(); ++k) out << ",y" << k;
    out << '\n';
    for (int i = 0; i < cfg.nz; ++i)
      for (int j = 0; j < cfg.nzbar; ++j) {
        const Vec& r = patch.r[static_cast<size_t>(patch.index(i, j))];
        out << fmt(sweep.z(i)) << ',' << fmt(sweep.zbar(j));
        for (size_t k = 0; k < ambient.vectors.size(); ++k) {
          double y = ambient.sign[k] * cfg.c * g.killing(ambient.vectors[k], r);
          out << ',' << fmt(y);
        }
        out << '\n';
      }
    immersion_info["emitted"] = true;
    immersion_info["max_ad_residual"] = finite_or_null(patch.max_ad_residual);
    immersion_info["curvature_check"] = finite_or_null(patch.curvature_check);
    immersion_info["non_solution_warning"] = patch.non_solution_warning;
  }

  // Report.
  nlohmann::ordered_json report;
  report["schema"] = "todasurf-report/1";
  report["algebra"] = {{"family", cfg.family},
                       {"n", cfg.n},
                       {"alpha_sq", cfg.alpha_sq},
                       {"dim", g.dim()}};
  report["model"] = {{"mu_plus", cfg.mu_plus},
                     {"mu_minus", cfg.mu_minus},
                     {"c", cfg.c},
                     {"lambda", cfg.lambda}};
  {
    nlohmann::ordered_json sol;
    sol["kind"] = cfg.kind == SolutionKind::builtin
                      ? "builtin"
                      : cfg.kind == SolutionKind::grid_file ? "grid" : "goursat";
    sol["name"] = cfg.name;
    if (!cfg.file.empty()) sol["file"] = cfg.file;
    if (cfg.kind == SolutionKind::goursat) sol["step"] = cfg.goursat_step;
    nlohmann::ordered_json params = nlohmann::ordered_json::object();
    for (const auto& [k, v] : cfg.params) params[k] = v;
    sol["params"] = params;
    report["solution"] = sol;
  }
  report["grid"] = {{"z_min", cfg.window.z_min},     {"z_max", cfg.window.z_max},
                    {"zbar_min", cfg.window.zbar_min}, {"zbar_max", cfg.window.zbar_max},
                    {"nz", cfg.nz},                   {"nzbar", cfg.nzbar},
                    {"fd_step", cfg.fd_step},         {"transport_step", cfg.transport_step}};
  {
    nlohmann::ordered_json sig;
    sig["nu_bar"] = orthonormal_basis(g, cfg.c).negative_count();
    if (signature_sample) {
      sig["nu_perp"] = signature_sample->nu_perp;
      sig["nu_sub"] = 1;  // det g < 0 at every non-degenerate point
      sig["eta_normal"] = signature_sample->eta;
    } else {
      sig["nu_perp"] = nullptr;
      sig["nu_sub"] = nullptr;
      sig["eta_normal"] = nullptr;
    }
    report["signature"] = sig;
  }
  {
    nlohmann::ordered_json checks = nlohmann::ordered_json::object();
    for (const auto& [name, spec] : cfg.checks) {
      const Accumulator& a = acc.at(name);
      nlohmann::ordered_json entry;
      entry["enabled"] = spec.enabled;
      entry["evaluated_points"] = a.evaluated;
      entry["max_residual"] = finite_or_null(a.max_value);
      entry["tolerance"] = spec.tolerance;
      entry["pass"] = check_pass.at(name);
      checks[name] = entry;
    }
    report["checks"] = checks;
  }
  {
    nlohmann::ordered_json q;
    q["count"] = quarantined_points.size();
    q["fraction"] = quarantine_fraction;
    q["max_fraction"] = cfg.max_quarantine_fraction;
    q["pass"] = quarantine_pass;
    nlohmann::ordered_json pts = nlohmann::ordered_json::array();
    for (size_t k = 0; k < quarantined_points.size() && k < 200; ++k)
      pts.push_back({quarantined_points[k][0], quarantined_points[k][1]});
    q["points"] = pts;
    q["points_truncated"] = quarantined_points.size() > 200;
    report["quarantine"] = q;
  }
  report["immersion"] = immersion_info;
  report["artifacts"] = {
      {"forms_csv", emit_csv && !cfg.forms_csv.empty()
                        ? nlohmann::ordered_json(cfg.forms_csv)
                        : nlohmann::ordered_json(nullptr)},
      {"immersion_csv", emit_csv && !cfg.immersion_csv.empty()
                            ? nlohmann::ordered_json(cfg.immersion_csv)
                            : nlohmann::ordered_json(nullptr)},
      {"report_json", !cfg.report_json.empty()
                          ? nlohmann::ordered_json(cfg.report_json)
                          : nlohmann::ordered_json(nullptr)}};
  report["pass"] = all_pass;
  report["exit_code"] = all_pass ? 0 : 1;

  RunOutcome outcome;
  outcome.pass = all_pass;
  outcome.exit_code = all_pass ? 0 : 1;
  outcome.report = report.dump(2) + "\n";

  if (!cfg.report_json.empty()) {
    std::ofstream out(cfg.report_json);
    if (!out)
      throw std::runtime_error("cannot open '" + cfg.report_json + "' for writing");
    out << outcome.report;
  }

  std::ostringstream sum;
  char line[160];
  for (const auto& [name, spec] : cfg.checks) {
    const Accumulator& a = acc.at(name);
    if (!spec.enabled) {
      std::snprintf(line, sizeof line, "check %-22s disabled\n", name.c_str());
    } else if (a.evaluated == 0) {
      std::snprintf(line, sizeof line,
                    "check %-22s no evaluated points            FAIL\n",
                    name.c_str());
    } else {
      std::snprintf(line, sizeof line,
                    "check %-22s max %.3e  tol %.1e  %s\n", name.c_str(),
                    a.max_value, spec.tolerance,
                    check_pass.at(name) ? "PASS" : "FAIL");
    }
    sum << line;
  }
  std::snprintf(line, sizeof line,
                "quarantine             %zu/%ld points (max fraction %.3g)  %s\n",
                quarantined_points.size(), total_points,
                cfg.max_quarantine_fraction, quarantine_pass ? "PASS" : "FAIL");
  sum << line;
  sum << "overall                " << (all_pass ? "PASS" : "FAIL") << "\n";
  outcome.summary = sum.str();
  return outcome;
}

}  // namespace todasurf
