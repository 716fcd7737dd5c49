#include "wittenlab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "wittenlab/detail/grid_loops.hpp"
#include "wittenlab/error.hpp"

namespace wittenlab {

using detail::for_lines;
using detail::for_nodes;
using detail::parallel_for;

namespace {

constexpr char field_magic[8] = {'W', 'L', 'F', 'I', 'E', 'L', 'D', '1'};

void check_order(int order, const char* where) {
  if (order != 2 && order != 4) {
    fail(ErrorKind::invalid_parameter, where, "stencil order must be 2 or 4");
  }
}

std::string node_text(const GridSpec& g, std::size_t idx) {
  std::vector<double> x(g.dims());
  g.node(idx, x);
  std::ostringstream os;
  os << "(";
  for (std::size_t k = 0; k < x.size(); ++k) os << (k ? "," : "") << x[k];
  os << ")";
  return os.str();
}

}  // namespace

void GridSpec::node(std::size_t index, std::span<double> x) const {
  for (std::size_t a = 0; a < dims(); ++a) x[a] = coordinate(axis_index(index, a));
}

std::size_t GridSpec::origin() const {
  const std::size_t mid = static_cast<std::size_t>(points_per_site / 2);
  std::size_t idx = 0;
  for (std::size_t a = 0; a < dims(); ++a) idx += mid * strides[a];
  return idx;
}

int GridSpec::face_distance(std::size_t index) const {
  int d = points_per_site;
  for (std::size_t a = 0; a < dims(); ++a) {
    const int k = axis_index(index, a);
    d = std::min({d, k, points_per_site - 1 - k});
  }
  return d;
}

GridPtr build_grid(std::shared_ptr<const LatticeSpec> lattice, double half_width, int points,
                   const GridOptions& options) {
  if (!lattice) fail(ErrorKind::invalid_input, "grid.build_grid", "no lattice");
  if (!(half_width > 0) || !std::isfinite(half_width)) {
    fail(ErrorKind::invalid_grid, "grid.build_grid", "L must be positive");
  }
  if (points < 3 || points % 2 == 0) {
    fail(ErrorKind::invalid_grid, "grid.build_grid",
         "points per site must be odd and at least 3, got " + std::to_string(points));
  }
  check_order(options.stencil_order, "grid.build_grid");
  const std::size_t n = lattice->size();
  double total = 1.0;
  for (std::size_t a = 0; a < n; ++a) total *= points;
  const double bytes = total * static_cast<double>(n + 2) * sizeof(double);
  if (bytes > options.memory_budget_bytes) {
    std::ostringstream os;
    os << "m^|Λ|·(|Λ|+2) doubles need " << bytes << " bytes, over the budget of "
       << options.memory_budget_bytes;
    fail(ErrorKind::resource, "grid.build_grid", os.str());
  }

  auto g = std::make_shared<GridSpec>();
  g->lattice = std::move(lattice);
  g->half_width = half_width;
  g->points_per_site = points;
  g->spacing = 2.0 * half_width / (points - 1);
  g->total_points = static_cast<std::size_t>(total);
  g->stencil_order = options.stencil_order;
  g->strides.assign(n, 1);
  for (std::size_t a = n; a-- > 1;) g->strides[a - 1] = g->strides[a] * points;

  g->weights.resize(g->total_points);
  const double cell = std::pow(g->spacing, static_cast<double>(n));
  const GridSpec& ref = *g;
  parallel_for(ref.total_points, [&](std::size_t i) {
    double w = cell;
    for (std::size_t a = 0; a < n; ++a) {
      const int k = ref.axis_index(i, a);
      if (k == 0 || k == points - 1) w *= 0.5;
    }
    g->weights[i] = w;
  });
  return g;
}

ScalarField::ScalarField(GridPtr g, double fill) : grid(std::move(g)), values(grid->total_points, fill) {}

OneFormField::OneFormField(GridPtr g, double fill)
    : grid(std::move(g)), values(grid->total_points * grid->dims(), fill) {}

std::span<double> OneFormField::component(std::size_t i) {
  return std::span<double>(values).subspan(i * grid->total_points, grid->total_points);
}

std::span<const double> OneFormField::component(std::size_t i) const {
  return std::span<const double>(values).subspan(i * grid->total_points, grid->total_points);
}

ScalarField OneFormField::component_field(std::size_t i) const {
  ScalarField f(grid);
  const auto c = component(i);
  std::copy(c.begin(), c.end(), f.values.begin());
  return f;
}

void OneFormField::set_component(std::size_t i, const ScalarField& f) {
  require_same_grid(*grid, *f.grid, "grid.set_component");
  std::copy(f.values.begin(), f.values.end(), component(i).begin());
}

void require_same_grid(const GridSpec& a, const GridSpec& b, const char* where) {
  if (&a != &b && !(a == b)) fail(ErrorKind::shape, where, "fields live on different grids");
}

SampledPotential sample_potential(const GridPtr& grid, const PotentialModel& model) {
  if (!(model.lattice() == *grid->lattice)) {
    fail(ErrorKind::shape, "grid.sample_potential", "model and grid use different lattices");
  }
  const std::size_t n = grid->dims();
  const std::size_t nodes = grid->total_points;
  SampledPotential s;
  s.grid = grid;
  s.pattern = model.hessian_pattern();
  const std::size_t np = s.pattern.size();
  s.phi.resize(nodes);
  s.grad.resize(nodes * n);
  s.witten.resize(nodes);
  s.hessian.resize(nodes * np);
  for_nodes(*grid, [&](std::size_t i, std::span<const double> x) {
    std::vector<double> gr(n);
    s.phi[i] = model.value(x);
    model.gradient(x, gr);
    double g2 = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      s.grad[a * nodes + i] = gr[a];
      g2 += gr[a] * gr[a];
    }
    s.witten[i] = 0.25 * g2 - 0.5 * model.laplacian(x);
    model.hessian_values(x, std::span<double>(s.hessian).subspan(i * np, np));
  });
  for (std::size_t i = 0; i < nodes; ++i) {
    if (!std::isfinite(s.phi[i]) || !std::isfinite(s.witten[i])) {
      fail(ErrorKind::evaluation, "grid.sample_potential",
           "non-finite potential at " + node_text(*grid, i));
    }
  }
  return s;
}

ScalarField sample_scalar(const GridPtr& grid,
                          const std::function<double(std::span<const double>)>& fn) {
  ScalarField f(grid);
  for_nodes(*grid, [&](std::size_t i, std::span<const double> x) { f.values[i] = fn(x); });
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!std::isfinite(f.values[i])) {
      fail(ErrorKind::evaluation, "grid.sample_scalar", "non-finite value at " + node_text(*grid, i));
    }
  }
  return f;
}

ScalarField sample_observable(const GridPtr& grid, const Observable& g) {
  return sample_scalar(grid, [&](std::span<const double> x) { return g.value(x); });
}

OneFormField weighted_observable_gradient(const GridPtr& grid, const Observable& g,
                                          const ScalarField& density) {
  require_same_grid(*grid, *density.grid, "grid.weighted_observable_gradient");
  OneFormField v(grid);
  const std::size_t n = grid->dims();
  const std::size_t nodes = grid->total_points;
  for_nodes(*grid, [&](std::size_t i, std::span<const double> x) {
    std::vector<double> gr(n);
    g.gradient(x, gr);
    for (std::size_t a = 0; a < n; ++a) v.values[a * nodes + i] = gr[a] * density.values[i];
  });
  return v;
}

GroundDensity ground_density(const SampledPotential& sampled) {
  const GridPtr& grid = sampled.grid;
  GroundDensity d;
  d.field = ScalarField(grid);
  double face_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid->total_points; ++i) {
    const double v = std::exp(-0.5 * sampled.phi[i]);
    if (!std::isfinite(v) || !(v > 0)) {
      fail(ErrorKind::evaluation, "grid.ground_density",
           "e^{-Φ/2} not representable at " + node_text(*grid, i));
    }
    d.field.values[i] = v;
    if (grid->face_distance(i) == 0) face_min = std::min(face_min, sampled.phi[i]);
  }
  ScalarField sq(grid);
  for (std::size_t i = 0; i < sq.size(); ++i) sq.values[i] = d.field.values[i] * d.field.values[i];
  const Quadrature q = quadrature(sq);
  if (!(q.value > 0)) fail(ErrorKind::measure, "grid.ground_density", "zero normalization");
  d.norm_sq = q.value;
  d.norm_sq_error = q.error_estimate;
  d.min_face_phi = face_min;
  return d;
}

GroundDensity ground_density(const GridPtr& grid, const PotentialModel& model) {
  return ground_density(sample_potential(grid, model));
}

ScalarField fd_partial(const ScalarField& field, std::size_t axis, int order) {
  check_order(order, "grid.fd_partial");
  const GridSpec& g = *field.grid;
  if (axis >= g.dims()) fail(ErrorKind::shape, "grid.fd_partial", "axis out of range");
  ScalarField out(field.grid);
  const int m = g.points_per_site;
  const double h = g.spacing;
  const double* u = field.values.data();
  double* o = out.values.data();
  for_lines(g, axis, [&](std::size_t start, std::size_t s) {
    auto at = [&](int k) { return u[start + static_cast<std::size_t>(k) * s]; };
    for (int k = 0; k < m; ++k) {
      double d;
      if (k == 0) {
        d = (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h);
      } else if (k == m - 1) {
        d = (3.0 * at(m - 1) - 4.0 * at(m - 2) + at(m - 3)) / (2.0 * h);
      } else if (order == 4 && k >= 2 && k <= m - 3) {
        d = (at(k - 2) - 8.0 * at(k - 1) + 8.0 * at(k + 1) - at(k + 2)) / (12.0 * h);
      } else {
        d = (at(k + 1) - at(k - 1)) / (2.0 * h);
      }
      o[start + static_cast<std::size_t>(k) * s] = d;
    }
  });
  return out;
}

OneFormField fd_gradient(const ScalarField& field, int order) {
  OneFormField v(field.grid);
  for (std::size_t a = 0; a < field.grid->dims(); ++a) v.set_component(a, fd_partial(field, a, order));
  return v;
}

ScalarField fd_divergence(const OneFormField& v, int order) {
  check_order(order, "grid.fd_divergence");
  const GridSpec& g = *v.grid;
  ScalarField out(v.grid);
  const int m = g.points_per_site;
  const double h = g.spacing;
  double* o = out.values.data();
  for (std::size_t a = 0; a < g.dims(); ++a) {
    const double* u = v.component(a).data();
    for_lines(g, a, [&](std::size_t start, std::size_t s) {
      auto at = [&](int k) { return (k < 0 || k >= m) ? 0.0 : u[start + static_cast<std::size_t>(k) * s]; };
      for (int k = 0; k < m; ++k) {
        const double d = order == 4
                             ? (at(k - 2) - 8.0 * at(k - 1) + 8.0 * at(k + 1) - at(k + 2)) / (12.0 * h)
                             : (at(k + 1) - at(k - 1)) / (2.0 * h);
        o[start + static_cast<std::size_t>(k) * s] += d;
      }
    });
  }
  return out;
}

ScalarField fd_laplacian(const ScalarField& field, int order) {
  check_order(order, "grid.fd_laplacian");
  ScalarField out(field.grid);
  detail::add_laplacian(*field.grid, order, field.values.data(), out.values.data());
  return out;
}

OneFormField twisted_gradient(const ScalarField& field, const SampledPotential& sampled, int order) {
  require_same_grid(*field.grid, *sampled.grid, "grid.twisted_gradient");
  OneFormField v = fd_gradient(field, order ? order : field.grid->stencil_order);
  const std::size_t nodes = field.grid->total_points;
  parallel_for(v.values.size(), [&](std::size_t k) {
    v.values[k] += 0.5 * sampled.grad[k] * field.values[k % nodes];
  });
  return v;
}

OneFormField twisted_gradient(const ScalarField& field, const PotentialModel& model, int order) {
  return twisted_gradient(field, sample_potential(field.grid, model), order);
}

Quadrature quadrature(const ScalarField& field) {
  const GridSpec& g = *field.grid;
  const double* f = field.values.data();
  const double* w = g.weights.data();
  Quadrature q;
  q.value = detail::deterministic_sum(field.size(), [&](std::size_t i) { return w[i] * f[i]; });

  // every other node: weight doubles per axis, faces still halved
  const double scale = std::pow(2.0, static_cast<double>(g.dims()));
  const double coarse = detail::deterministic_sum(field.size(), [&](std::size_t i) {
    for (std::size_t a = 0; a < g.dims(); ++a) {
      if (g.axis_index(i, a) % 2) return 0.0;
    }
    return scale * w[i] * f[i];
  });
  q.error_estimate = std::abs(q.value - coarse);
  return q;
}

double inner_product(const ScalarField& a, const ScalarField& b) {
  require_same_grid(*a.grid, *b.grid, "grid.inner_product");
  const double* w = a.grid->weights.data();
  return detail::deterministic_sum(a.size(),
                                   [&](std::size_t i) { return w[i] * a.values[i] * b.values[i]; });
}

double inner_product(const OneFormField& a, const OneFormField& b) {
  require_same_grid(*a.grid, *b.grid, "grid.inner_product");
  const std::size_t nodes = a.grid->total_points;
  const double* w = a.grid->weights.data();
  return detail::deterministic_sum(a.values.size(), [&](std::size_t k) {
    return w[k % nodes] * a.values[k] * b.values[k];
  });
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) fail(ErrorKind::shape, "grid.dot", "length mismatch");
  return detail::deterministic_sum(a.size(), [&](std::size_t i) { return a[i] * b[i]; });
}

void write_field_binary(const std::string& path, const GridSpec& grid, std::size_t components,
                        std::span<const double> values) {
  if (values.size() != grid.total_points * components) {
    fail(ErrorKind::shape, "grid.write_field_binary", "value count does not match the grid");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::invalid_input, "grid.write_field_binary", "cannot open " + path);
  const std::uint64_t sites = grid.dims();
  const std::int64_t m = grid.points_per_site;
  const double L = grid.half_width;
  const std::uint64_t comps = components;
  out.write(field_magic, sizeof field_magic);
  out.write(reinterpret_cast<const char*>(&sites), sizeof sites);
  out.write(reinterpret_cast<const char*>(&m), sizeof m);
  out.write(reinterpret_cast<const char*>(&L), sizeof L);
  out.write(reinterpret_cast<const char*>(&comps), sizeof comps);
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
}

FieldFile read_field_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::invalid_input, "grid.read_field_binary", "cannot open " + path);
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, field_magic, sizeof magic) != 0) {
    fail(ErrorKind::invalid_input, "grid.read_field_binary", "not a field file: " + path);
  }
  std::uint64_t sites = 0, comps = 0;
  std::int64_t m = 0;
  FieldFile f;
  in.read(reinterpret_cast<char*>(&sites), sizeof sites);
  in.read(reinterpret_cast<char*>(&m), sizeof m);
  in.read(reinterpret_cast<char*>(&f.half_width), sizeof f.half_width);
  in.read(reinterpret_cast<char*>(&comps), sizeof comps);
  if (!in || m < 1 || sites > 64) {
    fail(ErrorKind::invalid_input, "grid.read_field_binary", "truncated header in " + path);
  }
  f.sites = sites;
  f.points_per_site = static_cast<int>(m);
  f.components = comps;
  std::size_t count = comps;
  for (std::uint64_t a = 0; a < sites; ++a) count *= static_cast<std::size_t>(m);
  f.values.resize(count);
  in.read(reinterpret_cast<char*>(f.values.data()), static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) fail(ErrorKind::invalid_input, "grid.read_field_binary", "truncated data in " + path);
  return f;
}

void write_field_csv(const std::string& path, const ScalarField& field) {
  const GridSpec& g = *field.grid;
  if (g.dims() > 2) {
    fail(ErrorKind::invalid_input, "grid.write_field_csv", "CSV export needs at most 2 sites");
  }
  std::ofstream out(path);
  if (!out) fail(ErrorKind::invalid_input, "grid.write_field_csv", "cannot open " + path);
  for (std::size_t a = 0; a < g.dims(); ++a) out << "x" << a << ",";
  out << "value\n" << std::setprecision(17);
  std::vector<double> x(g.dims());
  for (std::size_t i = 0; i < field.size(); ++i) {
    g.node(i, x);
    for (double c : x) out << c << ",";
    out << field.values[i] << "\n";
  }
}

}  // namespace wittenlab
