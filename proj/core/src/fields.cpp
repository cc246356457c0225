#include "todasurf/fields.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "todasurf/errors.hpp"

namespace todasurf {

void GridData::check() const {
  if (phi.empty()) throw std::invalid_argument("GridData: no fields");
  if (spec.nz < 2 || spec.nzbar < 2)
    throw std::invalid_argument("GridData: need at least 2 nodes per direction");
  if (!(spec.dz > 0.0) || !(spec.dzbar > 0.0))
    throw std::invalid_argument("GridData: grid spacing must be positive");
  if (d1.size() != phi.size() || d2.size() != phi.size())
    throw std::invalid_argument("GridData: derivative field count mismatch");
  for (size_t f = 0; f < phi.size(); ++f)
    for (const Mat* m : {&phi[f], &d1[f], &d2[f]})
      if (m->rows() != spec.nz || m->cols() != spec.nzbar)
        throw std::invalid_argument("GridData: sample matrix shape mismatch");
}

using detail::fd_line;

namespace {

struct HermiteBasis {
  double v0, v1, d0, d1;    // value/derivative blending
  double v0p, v1p, d0p, d1p;  // their u-derivatives
};

HermiteBasis hermite(double u) {
  HermiteBasis b;
  b.v0 = 1.0 + u * u * (2.0 * u - 3.0);
  b.v1 = u * u * (3.0 - 2.0 * u);
  b.d0 = u * (1.0 + u * (u - 2.0));
  b.d1 = u * u * (u - 1.0);
  b.v0p = 6.0 * u * (u - 1.0);
  b.v1p = 6.0 * u * (1.0 - u);
  b.d0p = 1.0 + u * (3.0 * u - 4.0);
  b.d1p = u * (3.0 * u - 2.0);
  return b;
}

}  // namespace

struct FieldConfig::Impl {
  Kind kind = Kind::closed_form;
  int n_fields = 0;
  Domain domain;
  std::string name;

  EvalFn eval;
  CrossFn cross;

  GridData grid;
  std::vector<Mat> cross_nodes;  // symmetrized mixed-derivative estimates at nodes

  void locate(double x, double x0, double dx, int n, int& cell, double& u) const {
    cell = static_cast<int>(std::floor((x - x0) / dx));
    cell = std::clamp(cell, 0, n - 2);
    u = (x - (x0 + cell * dx)) / dx;
  }

  /// Hermite bicubic evaluation; sel: 0 = value, 1 = d/dz, 2 = d/dzbar, 3 = cross.
  Vec interpolate(double z, double zbar, int sel) const {
    const GridSpec& s = grid.spec;
    int i, j;
    double u, v;
    locate(z, s.z_min, s.dz, s.nz, i, u);
    locate(zbar, s.zbar_min, s.dzbar, s.nzbar, j, v);
    HermiteBasis bu = hermite(u), bv = hermite(v);

    double U[4], V[4];
    if (sel == 1 || sel == 3) {
      U[0] = bu.v0p / s.dz; U[1] = bu.v1p / s.dz; U[2] = bu.d0p; U[3] = bu.d1p;
    } else {
      U[0] = bu.v0; U[1] = bu.v1; U[2] = bu.d0 * s.dz; U[3] = bu.d1 * s.dz;
    }
    if (sel == 2 || sel == 3) {
      V[0] = bv.v0p / s.dzbar; V[1] = bv.v1p / s.dzbar; V[2] = bv.d0p; V[3] = bv.d1p;
    } else {
      V[0] = bv.v0; V[1] = bv.v1; V[2] = bv.d0 * s.dzbar; V[3] = bv.d1 * s.dzbar;
    }

    Vec out(n_fields);
    for (int f = 0; f < n_fields; ++f) {
      // 4x4 tensor of corner data: rows (value@i, value@i+1, dz@i, dz@i+1) x same in zbar.
      double m[4][4];
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
          m[a][b] = grid.phi[f](i + a, j + b);
          m[2 + a][b] = grid.d1[f](i + a, j + b);
          m[a][2 + b] = grid.d2[f](i + a, j + b);
          m[2 + a][2 + b] = cross_nodes[f](i + a, j + b);
        }
      double acc = 0.0;
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) acc += U[a] * m[a][b] * V[b];
      out[f] = acc;
    }
    return out;
  }
};

FieldConfig FieldConfig::closed_form(int n_fields, Domain domain, EvalFn eval,
                                     CrossFn cross, std::string name) {
  if (n_fields < 1) throw std::invalid_argument("FieldConfig: need n_fields >= 1");
  if (!eval) throw std::invalid_argument("FieldConfig: evaluator must be callable");
  auto impl = std::make_shared<Impl>();
  impl->kind = Kind::closed_form;
  impl->n_fields = n_fields;
  impl->domain = domain;
  impl->name = std::move(name);
  impl->eval = std::move(eval);
  impl->cross = std::move(cross);
  FieldConfig out;
  out.impl_ = std::move(impl);
  return out;
}

FieldConfig FieldConfig::grid(GridData data, std::string name) {
  data.check();
  auto impl = std::make_shared<Impl>();
  impl->kind = Kind::grid;
  impl->n_fields = data.n_fields();
  impl->domain = data.spec.domain();
  impl->name = std::move(name);
  impl->grid = std::move(data);

  const GridSpec& s = impl->grid.spec;
  impl->cross_nodes.resize(impl->n_fields);
  for (int f = 0; f < impl->n_fields; ++f) {
    Mat& x = impl->cross_nodes[f];
    x.resize(s.nz, s.nzbar);
    for (int i = 0; i < s.nz; ++i)
      for (int j = 0; j < s.nzbar; ++j) {
        const Mat& d1 = impl->grid.d1[f];
        const Mat& d2 = impl->grid.d2[f];
        double a = fd_line([&](int jj) { return d1(i, jj); }, s.nzbar, j, s.dzbar);
        double b = fd_line([&](int ii) { return d2(ii, j); }, s.nz, i, s.dz);
        x(i, j) = 0.5 * (a + b);
      }
  }
  FieldConfig out;
  out.impl_ = std::move(impl);
  return out;
}

FieldConfig::Kind FieldConfig::kind() const { return impl_->kind; }
int FieldConfig::n_fields() const { return impl_->n_fields; }
const Domain& FieldConfig::domain() const { return impl_->domain; }
const std::string& FieldConfig::name() const { return impl_->name; }
double FieldConfig::fd_step() const { return fd_step_; }
void FieldConfig::set_fd_step(double h) {
  if (!(h > 0.0)) throw std::invalid_argument("FieldConfig: fd_step must be positive");
  fd_step_ = h;
}
const GridData* FieldConfig::grid_data() const {
  return impl_->kind == Kind::grid ? &impl_->grid : nullptr;
}
bool FieldConfig::has_analytic_cross() const {
  return impl_->kind == Kind::closed_form && static_cast<bool>(impl_->cross);
}

namespace {
[[noreturn]] void domain_fail(const Domain& d, double z, double zbar) {
  std::ostringstream os;
  os << "field configuration evaluated outside its domain: (z, zbar) = (" << z << ", "
     << zbar << "), domain [" << d.z_min << ", " << d.z_max << "] x [" << d.zbar_min
     << ", " << d.zbar_max << "]";
  throw std::domain_error(os.str());
}
}  // namespace

FieldPoint FieldConfig::at(double z, double zbar) const {
  const Impl& im = *impl_;
  double slack = 1e-12 * (1.0 + std::max(im.domain.z_span(), im.domain.zbar_span()));
  if (!im.domain.contains(z, zbar, slack)) domain_fail(im.domain, z, zbar);
  if (im.kind == Kind::closed_form) {
    FieldPoint p = im.eval(z, zbar);
    if (p.phi.size() != im.n_fields || p.d1.size() != im.n_fields ||
        p.d2.size() != im.n_fields)
      throw std::invalid_argument("FieldConfig: evaluator returned wrong field count");
    return p;
  }
  FieldPoint p;
  p.phi = im.interpolate(z, zbar, 0);
  p.d1 = im.interpolate(z, zbar, 1);
  p.d2 = im.interpolate(z, zbar, 2);
  return p;
}

Vec FieldConfig::cross(double z, double zbar) const {
  const Impl& im = *impl_;
  double slack = 1e-12 * (1.0 + std::max(im.domain.z_span(), im.domain.zbar_span()));
  if (!im.domain.contains(z, zbar, slack)) domain_fail(im.domain, z, zbar);
  if (im.kind == Kind::grid) return im.interpolate(z, zbar, 3);
  if (im.cross) {
    Vec x = im.cross(z, zbar);
    if (x.size() != im.n_fields)
      throw std::invalid_argument("FieldConfig: cross callable returned wrong size");
    return x;
  }
  // Symmetrized central difference of the analytic first derivatives.
  const double h = fd_step_;
  Vec a = (im.eval(z + h, zbar).d2 - im.eval(z - h, zbar).d2) / (2.0 * h);
  Vec b = (im.eval(z, zbar + h).d1 - im.eval(z, zbar - h).d1) / (2.0 * h);
  return 0.5 * (a + b);
}

GridData sample_to_grid(const FieldConfig& fields, const GridSpec& spec) {
  GridData out;
  out.spec = spec;
  out.phi.assign(fields.n_fields(), Mat(spec.nz, spec.nzbar));
  out.d1.assign(fields.n_fields(), Mat(spec.nz, spec.nzbar));
  out.d2.assign(fields.n_fields(), Mat(spec.nz, spec.nzbar));
  for (int i = 0; i < spec.nz; ++i)
    for (int j = 0; j < spec.nzbar; ++j) {
      FieldPoint p = fields.at(spec.z(i), spec.zbar(j));
      for (int f = 0; f < fields.n_fields(); ++f) {
        out.phi[f](i, j) = p.phi[f];
        out.d1[f](i, j) = p.d1[f];
        out.d2[f](i, j) = p.d2[f];
      }
    }
  out.check();
  return out;
}

namespace {

std::string sci(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.16e", v);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  for (std::string& tok : out) {
    size_t a = tok.find_first_not_of(" \t\r");
    size_t b = tok.find_last_not_of(" \t\r");
    tok = (a == std::string::npos) ? std::string() : tok.substr(a, b - a + 1);
  }
  return out;
}

int token_column(const std::string& line, int index) {
  int col = 1, seen = 0;
  for (size_t p = 0; p < line.size(); ++p) {
    if (seen == index) break;
    if (line[p] == ',') {
      ++seen;
      col = static_cast<int>(p) + 2;
    }
  }
  return col;
}

double parse_double(const std::string& tok, const std::string& line, int line_no,
                    int index) {
  const char* begin = tok.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    throw ParseError("expected a number, got '" + tok + "'", line_no,
                     token_column(line, index));
  if (!std::isfinite(v))
    throw ParseError("non-finite value '" + tok + "'", line_no,
                     token_column(line, index));
  return v;
}

}  // namespace

void save_grid_csv(const std::string& path, const GridData& data) {
  data.check();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  const int n = data.n_fields();
  out << "z,zbar";
  for (int f = 1; f <= n; ++f) out << ",phi_" << f;
  for (int f = 1; f <= n; ++f) out << ",dphi1_" << f;
  for (int f = 1; f <= n; ++f) out << ",dphi2_" << f;
  out << "\n";
  for (int i = 0; i < data.spec.nz; ++i)
    for (int j = 0; j < data.spec.nzbar; ++j) {
      out << sci(data.spec.z(i)) << "," << sci(data.spec.zbar(j));
      for (int f = 0; f < n; ++f) out << "," << sci(data.phi[f](i, j));
      for (int f = 0; f < n; ++f) out << "," << sci(data.d1[f](i, j));
      for (int f = 0; f < n; ++f) out << "," << sci(data.d2[f](i, j));
      out << "\n";
    }
  if (!out) throw std::runtime_error("failed while writing '" + path + "'");
}

GridData load_grid_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty file: '" + path + "'", 1, 1);
  std::vector<std::string> head = split_csv_line(line);
  if (head.size() < 5 || head[0] != "z" || head[1] != "zbar")
    throw ParseError("header must start with 'z,zbar,phi_1,...'", 1, 1);
  if ((head.size() - 2) % 3 != 0)
    throw ParseError("header needs phi_*, dphi1_*, dphi2_* column groups of equal size",
                     1, 1);
  const int n = static_cast<int>((head.size() - 2) / 3);
  for (int f = 0; f < n; ++f) {
    auto expect = [&](int idx, const std::string& want) {
      if (head[idx] != want)
        throw ParseError("expected column '" + want + "', got '" + head[idx] + "'", 1,
                         token_column(line, idx));
    };
    expect(2 + f, "phi_" + std::to_string(f + 1));
    expect(2 + n + f, "dphi1_" + std::to_string(f + 1));
    expect(2 + 2 * n + f, "dphi2_" + std::to_string(f + 1));
  }

  struct Row {
    double z, zbar;
    std::vector<double> vals;
  };
  std::vector<Row> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<std::string> toks = split_csv_line(line);
    if (toks.size() != head.size())
      throw ParseError("row has " + std::to_string(toks.size()) + " columns, expected " +
                           std::to_string(head.size()),
                       line_no, 1);
    Row r;
    r.z = parse_double(toks[0], line, line_no, 0);
    r.zbar = parse_double(toks[1], line, line_no, 1);
    r.vals.resize(3 * static_cast<size_t>(n));
    for (int k = 0; k < 3 * n; ++k)
      r.vals[k] = parse_double(toks[2 + k], line, line_no, 2 + k);
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw ParseError("grid file has no data rows", line_no, 1);

  auto collect_axis = [&](auto get) {
    std::vector<double> vals;
    for (const Row& r : rows) vals.push_back(get(r));
    std::sort(vals.begin(), vals.end());
    std::vector<double> uniq;
    double span = std::max(1.0, vals.back() - vals.front());
    for (double v : vals)
      if (uniq.empty() || v - uniq.back() > 1e-9 * span) uniq.push_back(v);
    return uniq;
  };
  std::vector<double> zs = collect_axis([](const Row& r) { return r.z; });
  std::vector<double> zbars = collect_axis([](const Row& r) { return r.zbar; });
  if (zs.size() < 2 || zbars.size() < 2)
    throw ParseError("grid needs at least 2 distinct nodes per direction");
  if (rows.size() != zs.size() * zbars.size())
    throw ParseError("grid is incomplete: " + std::to_string(rows.size()) +
                     " rows for a " + std::to_string(zs.size()) + " x " +
                     std::to_string(zbars.size()) + " grid");

  auto uniform_step = [&](const std::vector<double>& ax, const char* which) {
    double step = (ax.back() - ax.front()) / static_cast<double>(ax.size() - 1);
    for (size_t i = 0; i < ax.size(); ++i)
      if (std::abs(ax[i] - (ax.front() + static_cast<double>(i) * step)) >
          1e-8 * std::max(1.0, std::abs(step)) * static_cast<double>(ax.size()))
        throw ParseError(std::string("non-uniform ") + which + " spacing in grid");
    return step;
  };

  GridData out;
  out.spec.z_min = zs.front();
  out.spec.zbar_min = zbars.front();
  out.spec.dz = uniform_step(zs, "z");
  out.spec.dzbar = uniform_step(zbars, "zbar");
  out.spec.nz = static_cast<int>(zs.size());
  out.spec.nzbar = static_cast<int>(zbars.size());
  out.phi.assign(n, Mat::Constant(out.spec.nz, out.spec.nzbar,
                                  std::numeric_limits<double>::quiet_NaN()));
  out.d1 = out.phi;
  out.d2 = out.phi;

  auto axis_index = [](const std::vector<double>& ax, double v) {
    auto it = std::lower_bound(ax.begin(), ax.end(), v);
    size_t i = static_cast<size_t>(it - ax.begin());
    if (i == ax.size() || (i > 0 && v - ax[i - 1] < ax[i] - v)) --i;
    return static_cast<int>(i);
  };
  Eigen::MatrixXi seen = Eigen::MatrixXi::Zero(out.spec.nz, out.spec.nzbar);
  for (const Row& r : rows) {
    int i = axis_index(zs, r.z);
    int j = axis_index(zbars, r.zbar);
    if (seen(i, j)++)
      throw ParseError("duplicate grid node at z=" + std::to_string(r.z) +
                       ", zbar=" + std::to_string(r.zbar));
    for (int f = 0; f < n; ++f) {
      out.phi[f](i, j) = r.vals[static_cast<size_t>(f)];
      out.d1[f](i, j) = r.vals[static_cast<size_t>(n + f)];
      out.d2[f](i, j) = r.vals[static_cast<size_t>(2 * n + f)];
    }
  }
  out.check();
  return out;
}

}  // namespace todasurf
