#include "wittenlab/observable.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "wittenlab/error.hpp"

namespace wittenlab {

namespace {

// φ^{(m)}(y)/φ(y) for φ(y) = exp(-a y²), via physicists' Hermite polynomials:
// φ^{(m)} = (-√a)^m H_m(√a y) φ.
double gaussian_derivative_ratio(int m, double a, double y) {
  const double s = std::sqrt(a);
  const double z = s * y;
  double h_prev = 1.0, h = 2.0 * z;
  if (m == 0) return 1.0;
  for (int k = 1; k < m; ++k) {
    const double next = 2.0 * z * h - 2.0 * k * h_prev;
    h_prev = h;
    h = next;
  }
  return std::pow(-s, m) * h;
}

void check_lattice(const std::shared_ptr<const LatticeSpec>& lattice, const char* where) {
  if (!lattice) fail(ErrorKind::invalid_input, where, "observable needs a lattice");
}

// Sort (site, payload...) triples by site and reject duplicates.
std::vector<std::size_t> sorted_order(const LatticeSpec& lattice,
                                      const std::vector<std::size_t>& sites, const char* where) {
  if (sites.empty()) fail(ErrorKind::empty_support, where, "observable needs at least one site");
  for (std::size_t s : sites) lattice.require_index(s, where);
  std::vector<std::size_t> order(sites.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return sites[a] < sites[b]; });
  for (std::size_t k = 1; k < order.size(); ++k) {
    if (sites[order[k]] == sites[order[k - 1]]) {
      fail(ErrorKind::invalid_input, where, "duplicate site " + std::to_string(sites[order[k]]));
    }
  }
  return order;
}

}  // namespace

std::string to_string(ObservableKind kind) {
  switch (kind) {
    case ObservableKind::coordinate: return "coordinate";
    case ObservableKind::linear: return "linear";
    case ObservableKind::bump: return "bump";
    case ObservableKind::coordinate_square: return "coordinate_square";
    case ObservableKind::constant: return "constant";
  }
  return "unknown";
}

Observable Observable::coordinate(std::shared_ptr<const LatticeSpec> lattice, std::size_t site) {
  check_lattice(lattice, "potential.observable");
  lattice->require_index(site, "potential.observable");
  Observable g;
  g.lattice_ = std::move(lattice);
  g.kind_ = ObservableKind::coordinate;
  g.support_ = SiteSubset{{site}};
  g.coefficients_ = {1.0};
  return g;
}

Observable Observable::linear(std::shared_ptr<const LatticeSpec> lattice,
                              std::vector<std::size_t> sites, std::vector<double> coefficients) {
  check_lattice(lattice, "potential.observable");
  if (sites.size() != coefficients.size()) {
    fail(ErrorKind::invalid_input, "potential.observable",
         "linear observable needs one coefficient per site");
  }
  const auto order = sorted_order(*lattice, sites, "potential.observable");
  Observable g;
  g.lattice_ = std::move(lattice);
  g.kind_ = ObservableKind::linear;
  for (auto k : order) {
    g.support_.members.push_back(sites[k]);
    g.coefficients_.push_back(coefficients[k]);
  }
  return g;
}

Observable Observable::bump(std::shared_ptr<const LatticeSpec> lattice,
                            std::vector<std::size_t> sites, std::vector<double> center,
                            double width) {
  check_lattice(lattice, "potential.observable");
  if (center.empty()) center.assign(sites.size(), 0.0);
  if (sites.size() != center.size()) {
    fail(ErrorKind::invalid_input, "potential.observable",
         "bump center must have one entry per site");
  }
  if (!(width > 0) || !std::isfinite(width)) {
    fail(ErrorKind::invalid_parameter, "potential.observable", "bump width must be positive");
  }
  const auto order = sorted_order(*lattice, sites, "potential.observable");
  Observable g;
  g.lattice_ = std::move(lattice);
  g.kind_ = ObservableKind::bump;
  g.a_ = 1.0 / (2.0 * width * width);
  for (auto k : order) {
    g.support_.members.push_back(sites[k]);
    g.center_.push_back(center[k]);
  }
  return g;
}

Observable Observable::coordinate_square(std::shared_ptr<const LatticeSpec> lattice,
                                         std::size_t site) {
  Observable g = coordinate(std::move(lattice), site);
  g.kind_ = ObservableKind::coordinate_square;
  return g;
}

Observable Observable::constant(std::shared_ptr<const LatticeSpec> lattice, double value) {
  check_lattice(lattice, "potential.observable");
  Observable g;
  g.lattice_ = std::move(lattice);
  g.kind_ = ObservableKind::constant;
  g.offset_ = value;
  return g;
}

Observable Observable::plus_constant(double shift) const {
  Observable g = *this;
  g.offset_ += shift;
  return g;
}

bool Observable::is_affine() const {
  return kind_ == ObservableKind::coordinate || kind_ == ObservableKind::linear ||
         kind_ == ObservableKind::constant;
}

double Observable::value(std::span<const double> x) const {
  const auto& m = support_.members;
  switch (kind_) {
    case ObservableKind::coordinate: return x[m[0]] + offset_;
    case ObservableKind::coordinate_square: return x[m[0]] * x[m[0]] + offset_;
    case ObservableKind::constant: return offset_;
    case ObservableKind::linear: {
      double s = 0.0;
      for (std::size_t k = 0; k < m.size(); ++k) s += coefficients_[k] * x[m[k]];
      return s + offset_;
    }
    case ObservableKind::bump: {
      double r2 = 0.0;
      for (std::size_t k = 0; k < m.size(); ++k) {
        const double y = x[m[k]] - center_[k];
        r2 += y * y;
      }
      return std::exp(-a_ * r2) + offset_;
    }
  }
  return 0.0;
}

void Observable::gradient(std::span<const double> x, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  const auto& m = support_.members;
  switch (kind_) {
    case ObservableKind::constant: return;
    case ObservableKind::coordinate:
    case ObservableKind::linear:
      for (std::size_t k = 0; k < m.size(); ++k) out[m[k]] = coefficients_[k];
      return;
    case ObservableKind::coordinate_square: out[m[0]] = 2.0 * x[m[0]]; return;
    case ObservableKind::bump: {
      const double g = value(x) - offset_;
      for (std::size_t k = 0; k < m.size(); ++k) {
        out[m[k]] = -2.0 * a_ * (x[m[k]] - center_[k]) * g;
      }
      return;
    }
  }
}

Eigen::MatrixXd Observable::hessian(std::span<const double> x) const {
  const std::size_t n = lattice_->size();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  const auto& m = support_.members;
  if (kind_ == ObservableKind::coordinate_square) {
    h(m[0], m[0]) = 2.0;
  } else if (kind_ == ObservableKind::bump) {
    const double g = value(x) - offset_;
    for (std::size_t p = 0; p < m.size(); ++p) {
      const double yp = x[m[p]] - center_[p];
      for (std::size_t q = 0; q < m.size(); ++q) {
        const double yq = x[m[q]] - center_[q];
        h(m[p], m[q]) = (4.0 * a_ * a_ * yp * yq - (p == q ? 2.0 * a_ : 0.0)) * g;
      }
    }
  }
  return h;
}

double Observable::partial(std::span<const double> x, std::span<const std::size_t> indices) const {
  if (indices.empty()) return value(x);
  for (std::size_t i : indices) lattice_->require_index(i, "potential.observable.partial");
  const auto& m = support_.members;
  for (std::size_t i : indices) {
    if (!support_.contains(i)) return 0.0;
  }
  const std::size_t order = indices.size();
  switch (kind_) {
    case ObservableKind::constant: return 0.0;
    case ObservableKind::coordinate:
    case ObservableKind::linear: {
      if (order > 1) return 0.0;
      const auto pos = std::lower_bound(m.begin(), m.end(), indices[0]) - m.begin();
      return coefficients_[pos];
    }
    case ObservableKind::coordinate_square:
      if (order == 1) return 2.0 * x[m[0]];
      return order == 2 ? 2.0 : 0.0;
    case ObservableKind::bump: {
      double factor = value(x) - offset_;
      for (std::size_t k = 0; k < m.size(); ++k) {
        const int mult = static_cast<int>(std::count(indices.begin(), indices.end(), m[k]));
        if (mult > 0) factor *= gaussian_derivative_ratio(mult, a_, x[m[k]] - center_[k]);
      }
      return factor;
    }
  }
  return 0.0;
}

std::string Observable::describe() const {
  std::ostringstream os;
  os << to_string(kind_) << "(";
  for (std::size_t k = 0; k < support_.members.size(); ++k) {
    if (k) os << ",";
    os << support_.members[k];
  }
  os << ")";
  return os.str();
}

}  // namespace wittenlab
