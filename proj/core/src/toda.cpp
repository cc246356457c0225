#include "todasurf/toda.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace todasurf {

namespace {

Vec cartan_combine(const std::vector<Vec>& dirs, const Vec& coeff) {
  Vec out = Vec::Zero(dirs.front().size());
  for (size_t i = 0; i < dirs.size(); ++i) out += coeff[static_cast<int>(i)] * dirs[i];
  return out;
}

void check_rank(const TodaModel& model, const FieldConfig& fields) {
  if (fields.n_fields() != model.n_fields()) {
    std::ostringstream os;
    os << "field configuration has " << fields.n_fields() << " fields, model expects "
       << model.n_fields();
    throw std::invalid_argument(os.str());
  }
}

}  // namespace

void TodaModel::validate(bool allow_zero_eps) const {
  if (!algebra) throw std::runtime_error("TodaModel: algebra not set");
  const LieAlgebra& g = *algebra;
  if (static_cast<int>(grading.grade.size()) != g.dim())
    throw std::runtime_error("TodaModel: grading does not match the algebra");
  if (cartan_dirs.empty()) throw std::runtime_error("TodaModel: no cartan_dirs");
  if (eps_plus.size() != g.dim() || eps_minus.size() != g.dim())
    throw std::runtime_error("TodaModel: eps element has wrong dimension");

  auto check_grade = [&](const Vec& v, int grade, const char* who) {
    double scale = std::max(1.0, v.cwiseAbs().maxCoeff());
    Vec dev = g.bracket(grading.Q, v) - static_cast<double>(grade) * v;
    if (dev.cwiseAbs().maxCoeff() > 1e-10 * scale) {
      std::ostringstream os;
      os << "TodaModel: " << who << " is not a pure grade-" << grade << " element";
      throw std::runtime_error(os.str());
    }
  };
  check_grade(eps_plus, +1, "eps_plus");
  check_grade(eps_minus, -1, "eps_minus");
  if (!allow_zero_eps) {
    if (eps_plus.cwiseAbs().maxCoeff() == 0.0)
      throw std::runtime_error("TodaModel: eps_plus vanishes");
    if (eps_minus.cwiseAbs().maxCoeff() == 0.0)
      throw std::runtime_error("TodaModel: eps_minus vanishes");
  }

  Mat C(g.dim(), n_fields());
  for (int i = 0; i < n_fields(); ++i) {
    const Vec& hi = cartan_dirs[static_cast<size_t>(i)];
    if (hi.size() != g.dim())
      throw std::runtime_error("TodaModel: cartan_dir has wrong dimension");
    check_grade(hi, 0, "cartan_dir");
    for (int j = 0; j < i; ++j) {
      Vec comm = g.bracket(hi, cartan_dirs[static_cast<size_t>(j)]);
      if (comm.cwiseAbs().maxCoeff() > 1e-10)
        throw std::runtime_error("TodaModel: cartan_dirs do not commute");
    }
    C.col(i) = hi;
  }
  Eigen::ColPivHouseholderQR<Mat> qr(C);
  if (qr.rank() < n_fields())
    throw std::runtime_error("TodaModel: cartan_dirs are linearly dependent");

  if (c == 0.0) throw std::runtime_error("TodaModel: c must be nonzero");
}

TodaModel TodaModel::with_lambda(double new_lambda) const {
  TodaModel out = *this;
  out.lambda = new_lambda;
  return out;
}

TodaModel make_sl_toda(const SlAlgebra& sl, double mu_plus, double mu_minus, double c,
                       double lambda, bool allow_zero_eps) {
  TodaModel m;
  m.algebra = std::make_shared<LieAlgebra>(sl.algebra);
  m.grading = sl.grading;
  const int dim = sl.algebra.dim();
  m.eps_plus = Vec::Zero(dim);
  m.eps_minus = Vec::Zero(dim);
  for (int i = 0; i < sl.handles.n - 1; ++i) {
    m.eps_plus += mu_plus * sl.handles.e_plus[static_cast<size_t>(i)];
    m.eps_minus += mu_minus * sl.handles.e_minus[static_cast<size_t>(i)];
  }
  m.cartan_dirs = sl.handles.h;
  m.mu_plus = mu_plus;
  m.mu_minus = mu_minus;
  m.c = c;
  m.lambda = lambda;
  m.validate(allow_zero_eps);
  return m;
}

GaugeData gauge_at(const TodaModel& model, const FieldConfig& fields, double z,
                   double zbar) {
  check_rank(model, fields);
  const LieAlgebra& g = *model.algebra;
  FieldPoint p = fields.at(z, zbar);

  Vec D = cartan_combine(model.cartan_dirs, p.phi);
  Vec D1 = cartan_combine(model.cartan_dirs, p.d1);
  Vec D2 = cartan_combine(model.cartan_dirs, p.d2);
  Vec P = g.ad_exp_apply(D, model.eps_minus);

  const double el = std::exp(model.lambda), eml = std::exp(-model.lambda);

  GaugeData gd;
  gd.ad_B_eps_minus = P;
  gd.dB_Binv_2 = D2;
  gd.a1 = eml * P;
  gd.a2 = -el * model.eps_plus - D2;
  gd.a1_l = -gd.a1;
  gd.a2_l = -el * model.eps_plus;
  gd.a1_1l = -eml * g.bracket(D1, P);
  gd.a1_2l = -eml * g.bracket(D2, P);
  gd.a2_1l = Vec::Zero(g.dim());
  gd.a2_2l = Vec::Zero(g.dim());
  return gd;
}

Vec toda_rhs(const TodaModel& model, const Vec& phi) {
  const LieAlgebra& g = *model.algebra;
  if (phi.size() != model.n_fields())
    throw std::invalid_argument("toda_rhs: phi has wrong number of fields");
  Vec D = cartan_combine(model.cartan_dirs, phi);
  Vec w = g.bracket(model.eps_minus, g.ad_exp_apply(-D, model.eps_plus));
  Mat C(g.dim(), model.n_fields());
  for (int i = 0; i < model.n_fields(); ++i)
    C.col(i) = model.cartan_dirs[static_cast<size_t>(i)];
  return C.colPivHouseholderQr().solve(-w);
}

Vec field_residual(const TodaModel& model, const FieldConfig& fields, double z,
                   double zbar) {
  check_rank(model, fields);
  Vec cross = fields.cross(z, zbar);
  Vec rhs = toda_rhs(model, fields.at(z, zbar).phi);
  return cross - rhs;
}

Vec zero_curvature_residual(const TodaModel& model, const FieldConfig& fields,
                            double z, double zbar) {
  check_rank(model, fields);
  const LieAlgebra& g = *model.algebra;
  GaugeData gd = gauge_at(model, fields, z, zbar);
  Vec cross = fields.cross(z, zbar);

  // d1 a2 = -sum_i (d1 d2 phi_i) h_i, d2 a1 = e^{-lambda} [D2, B eps_minus B^{-1}].
  Vec d1a2 = -cartan_combine(model.cartan_dirs, cross);
  Vec d2a1 = std::exp(-model.lambda) * g.bracket(gd.dB_Binv_2, gd.ad_B_eps_minus);
  return d1a2 - d2a1 + g.bracket(gd.a1, gd.a2);
}

namespace {

double param(const std::map<std::string, double>& params, const std::string& key,
             double fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

double shape_factor(int n_fields, const std::string& name) {
  if (n_fields == 1) return 1.0;
  if (n_fields == 2) return 2.0;
  throw std::invalid_argument("exact_solution '" + name + "': only 1 or 2 fields supported");
}

Domain domain_from_params(const std::map<std::string, double>& params, Domain fallback) {
  Domain d;
  d.z_min = param(params, "z_min", fallback.z_min);
  d.z_max = param(params, "z_max", fallback.z_max);
  d.zbar_min = param(params, "zbar_min", fallback.zbar_min);
  d.zbar_max = param(params, "zbar_max", fallback.zbar_max);
  if (!(d.z_max > d.z_min) || !(d.zbar_max > d.zbar_min))
    throw std::invalid_argument("exact_solution: empty domain");
  return d;
}

}  // namespace

FieldConfig exact_solution(const std::string& name, int n_fields,
                           const std::map<std::string, double>& params) {
  const double s = shape_factor(n_fields, name);
  const double a = param(params, "a", 1.0);
  if (!(a > 0.0)) throw std::invalid_argument("exact_solution: need amplitude a > 0");

  if (name == "liouville_log") {
    Domain dom = domain_from_params(params, {0.05, 1.05, 0.05, 1.05});
    auto eval = [n_fields, s, a](double z, double zbar) {
      double u = z + zbar;
      if (!(a * u > 0.0)) {
        std::ostringstream os;
        os << "liouville_log: undefined at z + zbar = " << u;
        throw std::domain_error(os.str());
      }
      FieldPoint p;
      p.phi = Vec::Constant(n_fields, s * std::log(a * u));
      p.d1 = Vec::Constant(n_fields, s / u);
      p.d2 = p.d1;
      return p;
    };
    auto cross = [n_fields, s](double z, double zbar) {
      double u = z + zbar;
      return Vec::Constant(n_fields, -s / (u * u)).eval();
    };
    return FieldConfig::closed_form(n_fields, dom, eval, cross, name);
  }

  if (name == "liouville_cosh") {
    Domain dom = domain_from_params(params, {0.0, 1.0, 0.0, 1.0});
    auto eval = [n_fields, s, a](double z, double zbar) {
      double u = a * (z + zbar);
      FieldPoint p;
      p.phi = Vec::Constant(n_fields, s * std::log(std::cosh(u)));
      p.d1 = Vec::Constant(n_fields, s * a * std::tanh(u));
      p.d2 = p.d1;
      return p;
    };
    auto cross = [n_fields, s, a](double z, double zbar) {
      double u = a * (z + zbar);
      double sech = 1.0 / std::cosh(u);
      return Vec::Constant(n_fields, s * a * a * sech * sech).eval();
    };
    return FieldConfig::closed_form(n_fields, dom, eval, cross, name);
  }

  if (name == "vacuum_perturbation_grid") {
    shape_factor(n_fields, name);
    Domain dom = domain_from_params(params, {0.0, 1.0, 0.0, 1.0});
    const double amp = param(params, "amp", 0.05);
    const double freq = param(params, "freq", 1.0);
    const int nz = static_cast<int>(param(params, "nz", 21));
    const int nzbar = static_cast<int>(param(params, "nzbar", 21));
    if (nz < 2 || nzbar < 2)
      throw std::invalid_argument("vacuum_perturbation_grid: need nz, nzbar >= 2");

    GridData data;
    data.spec.z_min = dom.z_min;
    data.spec.zbar_min = dom.zbar_min;
    data.spec.nz = nz;
    data.spec.nzbar = nzbar;
    data.spec.dz = dom.z_span() / (nz - 1);
    data.spec.dzbar = dom.zbar_span() / (nzbar - 1);
    data.phi.assign(static_cast<size_t>(n_fields), Mat(nz, nzbar));
    data.d1 = data.phi;
    data.d2 = data.phi;
    for (int f = 0; f < n_fields; ++f) {
      double ph = 0.3 * f;
      for (int i = 0; i < nz; ++i)
        for (int j = 0; j < nzbar; ++j) {
          double z = data.spec.z(i), zbar = data.spec.zbar(j);
          data.phi[f](i, j) =
              amp * (std::sin(freq * z + ph) + std::cos(freq * zbar - ph));
          data.d1[f](i, j) = amp * freq * std::cos(freq * z + ph);
          data.d2[f](i, j) = -amp * freq * std::sin(freq * zbar - ph);
        }
    }
    return FieldConfig::grid(std::move(data), name);
  }

  throw std::invalid_argument("exact_solution: unknown solution '" + name + "'");
}

double required_mu_product(const std::string& name, int n_fields,
                           const std::map<std::string, double>& params) {
  const double s = shape_factor(n_fields, name);
  const double a = param(params, "a", 1.0);
  if (name == "liouville_log") return -s * a * a;
  if (name == "liouville_cosh") return s * a * a;
  if (name == "vacuum_perturbation_grid") return 0.0;
  throw std::invalid_argument("required_mu_product: unknown solution '" + name + "'");
}

GoursatResult goursat_solve(const TodaModel& model,
                            const std::function<Vec(double)>& phi_on_z_min,
                            const std::function<Vec(double)>& phi_on_zbar_min,
                            const Domain& domain, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("goursat_solve: need step h > 0");
  if (!(domain.z_span() > 0.0) || !(domain.zbar_span() > 0.0))
    throw std::invalid_argument("goursat_solve: empty domain");
  const int n = model.n_fields();

  const int nz = std::max(2, static_cast<int>(std::lround(domain.z_span() / h)) + 1);
  const int nzbar =
      std::max(2, static_cast<int>(std::lround(domain.zbar_span() / h)) + 1);
  const double hz = domain.z_span() / (nz - 1);
  const double hzbar = domain.zbar_span() / (nzbar - 1);

  auto edge = [n](const std::function<Vec(double)>& f, double x, const char* who) {
    Vec v = f(x);
    if (v.size() != n)
      throw std::invalid_argument(std::string("goursat_solve: ") + who +
                                  " returned wrong field count");
    return v;
  };

  Vec corner_a = edge(phi_on_z_min, domain.zbar_min, "phi_on_z_min");
  Vec corner_b = edge(phi_on_zbar_min, domain.z_min, "phi_on_zbar_min");
  double cscale = std::max(1.0, corner_a.cwiseAbs().maxCoeff());
  if ((corner_a - corner_b).cwiseAbs().maxCoeff() > 1e-8 * cscale)
    throw std::invalid_argument(
        "goursat_solve: edge data disagree at the corner (z_min, zbar_min)");

  std::vector<Mat> phi(static_cast<size_t>(n), Mat(nz, nzbar));
  std::vector<Mat> rhs(static_cast<size_t>(n), Mat(nz, nzbar));
  auto set_node = [&](int i, int j, const Vec& v) {
    Vec r = toda_rhs(model, v);
    for (int f = 0; f < n; ++f) {
      phi[f](i, j) = v[f];
      rhs[f](i, j) = r[f];
    }
    return r.allFinite() && v.allFinite();
  };
  auto get_phi = [&](int i, int j) {
    Vec v(n);
    for (int f = 0; f < n; ++f) v[f] = phi[f](i, j);
    return v;
  };
  auto get_rhs = [&](int i, int j) {
    Vec v(n);
    for (int f = 0; f < n; ++f) v[f] = rhs[f](i, j);
    return v;
  };

  bool ok = true;
  for (int j = 0; j < nzbar && ok; ++j)
    ok = set_node(0, j, edge(phi_on_z_min, domain.zbar_min + j * hzbar, "phi_on_z_min"));
  if (!ok)
    throw std::invalid_argument("goursat_solve: non-finite data on the z_min edge");

  bool truncated = false;
  int rows_done = 1;
  const double cell = hz * hzbar;
  for (int i = 1; i < nz; ++i) {
    bool row_ok =
        set_node(i, 0, edge(phi_on_zbar_min, domain.z_min + i * hz, "phi_on_zbar_min"));
    for (int j = 1; j < nzbar && row_ok; ++j) {
      Vec base = get_phi(i, j - 1) + get_phi(i - 1, j) - get_phi(i - 1, j - 1);
      Vec r_sw = get_rhs(i - 1, j - 1);
      Vec pred = base + cell * r_sw;
      Vec r_pred = toda_rhs(model, pred);
      Vec corr =
          base + 0.25 * cell * (r_sw + get_rhs(i - 1, j) + get_rhs(i, j - 1) + r_pred);
      row_ok = corr.allFinite() && set_node(i, j, corr);
    }
    if (!row_ok) {
      truncated = true;
      break;
    }
    rows_done = i + 1;
  }
  if (rows_done < 2)
    throw std::runtime_error("goursat_solve: solution blew up before the second layer");

  GridData data;
  data.spec.z_min = domain.z_min;
  data.spec.zbar_min = domain.zbar_min;
  data.spec.dz = hz;
  data.spec.dzbar = hzbar;
  data.spec.nz = rows_done;
  data.spec.nzbar = nzbar;
  data.phi.assign(static_cast<size_t>(n), Mat(rows_done, nzbar));
  data.d1 = data.phi;
  data.d2 = data.phi;
  for (int f = 0; f < n; ++f) {
    data.phi[f] = phi[static_cast<size_t>(f)].topRows(rows_done);
    for (int i = 0; i < rows_done; ++i)
      for (int j = 0; j < nzbar; ++j) {
        data.d1[f](i, j) = detail::fd_line(
            [&](int ii) { return phi[static_cast<size_t>(f)](ii, j); }, rows_done, i,
            hz);
        data.d2[f](i, j) = detail::fd_line(
            [&](int jj) { return phi[static_cast<size_t>(f)](i, jj); }, nzbar, j,
            hzbar);
      }
  }

  GoursatResult out;
  out.fields = FieldConfig::grid(std::move(data), "goursat");
  out.truncated = truncated;
  out.rows_completed = rows_done;
  out.max_residual = 0.0;
  for (int i = 1; i + 1 < rows_done; ++i)
    for (int j = 1; j + 1 < nzbar; ++j) {
      Vec r = field_residual(model, out.fields, out.fields.grid_data()->spec.z(i),
                             out.fields.grid_data()->spec.zbar(j));
      out.max_residual = std::max(out.max_residual, r.cwiseAbs().maxCoeff());
    }
  return out;
}

}  // namespace todasurf
