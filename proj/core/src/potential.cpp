#include "wittenlab/potential.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "wittenlab/error.hpp"

namespace wittenlab {

namespace {

double log_cosh(double s) {
  const double a = std::abs(s);
  return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
}

// d^p/ds^p ln cosh(s), p = 1..4
double log_cosh_derivative(int p, double s) {
  const double th = std::tanh(s);
  const double sech2 = 1.0 - th * th;
  switch (p) {
    case 0: return log_cosh(s);
    case 1: return th;
    case 2: return sech2;
    case 3: return -2.0 * th * sech2;
    case 4: return sech2 * (6.0 * th * th - 2.0);
  }
  fail(ErrorKind::unsupported_order, "potential.partial", "order above 4");
}

constexpr std::size_t max_order = 4;

}  // namespace

std::string to_string(PotentialKind kind) {
  switch (kind) {
    case PotentialKind::gaussian: return "gaussian";
    case PotentialKind::kac: return "kac";
    case PotentialKind::tilted: return "tilted";
  }
  return "unknown";
}

struct TiltAccess {
  static PotentialModel make(const PotentialModel& base, const Observable& g, double t) {
    PotentialModel m;
    m.kind_ = PotentialKind::tilted;
    m.lattice_ = base.lattice_;
    m.nu_ = base.nu_;
    m.c_ = base.c_;
    m.base_ = std::make_shared<const PotentialModel>(base);
    m.g_ = std::make_shared<const Observable>(g);
    m.t_ = t;
    m.warnings_ = base.warnings_;
    m.build_pattern();
    return m;
  }
  static void warn(PotentialModel& m, std::string w) { m.warnings_.push_back(std::move(w)); }
};

const PotentialModel& PotentialModel::base() const {
  if (kind_ != PotentialKind::tilted) {
    fail(ErrorKind::invalid_input, "potential.base", "model is not tilted");
  }
  return *base_;
}

const Observable& PotentialModel::tilt_observable() const {
  if (kind_ != PotentialKind::tilted) {
    fail(ErrorKind::invalid_input, "potential.tilt_observable", "model is not tilted");
  }
  return *g_;
}

void PotentialModel::build_pattern() {
  const std::size_t n = lattice_->size();
  std::set<std::pair<std::size_t, std::size_t>> off;
  const PotentialModel* root = this;
  while (root->kind_ == PotentialKind::tilted) root = root->base_.get();
  if (root->kind_ == PotentialKind::kac) {
    for (const auto& b : lattice_->bonds()) off.insert(b);
  }
  for (const PotentialModel* m = this; m->kind_ == PotentialKind::tilted; m = m->base_.get()) {
    if (m->g_->is_affine()) continue;
    const auto& s = m->g_->support().members;
    for (std::size_t p = 0; p < s.size(); ++p) {
      for (std::size_t q = p + 1; q < s.size(); ++q) off.emplace(s[p], s[q]);
    }
  }
  pattern_.clear();
  for (std::size_t i = 0; i < n; ++i) pattern_.emplace_back(i, i);
  pattern_.insert(pattern_.end(), off.begin(), off.end());
}

double PotentialModel::value(std::span<const double> x) const {
  if (kind_ == PotentialKind::tilted) return base_->value(x) - t_ * g_->value(x);
  double phi = 0.0;
  for (std::size_t i = 0; i < size(); ++i) phi += 0.5 * x[i] * x[i];
  if (kind_ == PotentialKind::kac) {
    for (const auto& [i, j] : lattice_->bonds()) phi -= 2.0 * log_cosh(c_ * (x[i] + x[j]));
  }
  return phi;
}

void PotentialModel::gradient(std::span<const double> x, std::span<double> out) const {
  if (kind_ == PotentialKind::tilted) {
    base_->gradient(x, out);
    std::vector<double> gg(size());
    g_->gradient(x, gg);
    for (std::size_t i = 0; i < size(); ++i) out[i] -= t_ * gg[i];
    return;
  }
  for (std::size_t i = 0; i < size(); ++i) out[i] = x[i];
  if (kind_ == PotentialKind::kac) {
    for (const auto& [i, j] : lattice_->bonds()) {
      const double d = 2.0 * c_ * std::tanh(c_ * (x[i] + x[j]));
      out[i] -= d;
      out[j] -= d;
    }
  }
}

double PotentialModel::laplacian(std::span<const double> x) const {
  if (kind_ == PotentialKind::tilted) {
    double tr = 0.0;
    if (!g_->is_affine()) {
      for (std::size_t i : g_->support().members) {
        const std::size_t idx[2] = {i, i};
        tr += g_->partial(x, idx);
      }
    }
    return base_->laplacian(x) - t_ * tr;
  }
  double lap = static_cast<double>(size());
  if (kind_ == PotentialKind::kac) {
    for (const auto& [i, j] : lattice_->bonds()) {
      const double th = std::tanh(c_ * (x[i] + x[j]));
      lap -= 2.0 * nu_ * (1.0 - th * th);
    }
  }
  return lap;
}

void PotentialModel::hessian_values(std::span<const double> x, std::span<double> out) const {
  const std::size_t n = size();
  if (kind_ == PotentialKind::tilted) {
    // base entries are a subset of ours; locate them by search (patterns are tiny)
    const auto& bp = base_->pattern_;
    std::vector<double> bv(bp.size());
    base_->hessian_values(x, bv);
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t k = 0; k < bp.size(); ++k) {
      const auto it = std::find(pattern_.begin(), pattern_.end(), bp[k]);
      out[it - pattern_.begin()] = bv[k];
    }
    if (!g_->is_affine()) {
      for (std::size_t k = 0; k < pattern_.size(); ++k) {
        const auto [i, j] = pattern_[k];
        if (g_->support().contains(i) && g_->support().contains(j)) {
          const std::size_t idx[2] = {i, j};
          out[k] -= t_ * g_->partial(x, idx);
        }
      }
    }
    return;
  }
  for (std::size_t i = 0; i < n; ++i) out[i] = 1.0;
  if (kind_ == PotentialKind::kac) {
    // off-diagonal entries follow the diagonal in bond order
    const auto& bonds = lattice_->bonds();
    for (std::size_t b = 0; b < bonds.size(); ++b) {
      const auto [i, j] = bonds[b];
      const double th = std::tanh(c_ * (x[i] + x[j]));
      const double v = -nu_ * (1.0 - th * th);
      out[i] += v;
      out[j] += v;
      out[n + b] = v;
    }
  }
}

Eigen::MatrixXd PotentialModel::hessian(std::span<const double> x) const {
  const std::size_t n = size();
  std::vector<double> vals(pattern_.size());
  hessian_values(x, vals);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t k = 0; k < pattern_.size(); ++k) {
    const auto [i, j] = pattern_[k];
    h(i, j) = vals[k];
    h(j, i) = vals[k];
  }
  return h;
}

double PotentialModel::partial(std::span<const double> x, std::span<const std::size_t> indices) const {
  if (indices.size() > max_order) {
    fail(ErrorKind::unsupported_order, "potential.partial",
         "order " + std::to_string(indices.size()) + " exceeds 4");
  }
  for (std::size_t i : indices) lattice_->require_index(i, "potential.partial");
  if (indices.empty()) return value(x);
  if (kind_ == PotentialKind::tilted) return base_->partial(x, indices) - t_ * g_->partial(x, indices);

  const std::size_t p = indices.size();
  double d = 0.0;
  if (p == 1) d = x[indices[0]];
  if (p == 2 && indices[0] == indices[1]) d = 1.0;
  if (kind_ == PotentialKind::kac) {
    const double cp = std::pow(c_, static_cast<double>(p));
    for (const auto& [i, j] : lattice_->bonds()) {
      const bool local = std::all_of(indices.begin(), indices.end(),
                                     [&](std::size_t k) { return k == i || k == j; });
      if (local) d -= 2.0 * cp * log_cosh_derivative(static_cast<int>(p), c_ * (x[i] + x[j]));
    }
  }
  return d;
}

double PotentialModel::delta_energy(std::span<const double> x, std::size_t i, double y) const {
  if (kind_ == PotentialKind::tilted) {
    std::vector<double> moved(x.begin(), x.end());
    moved[i] = y;
    return base_->delta_energy(x, i, y) - t_ * (g_->value(moved) - g_->value(x));
  }
  double d = 0.5 * (y * y - x[i] * x[i]);
  if (kind_ == PotentialKind::kac) {
    for (std::size_t j : lattice_->neighbors(i)) {
      d -= 2.0 * (log_cosh(c_ * (y + x[j])) - log_cosh(c_ * (x[i] + x[j])));
    }
  }
  return d;
}

std::vector<std::vector<std::size_t>> PotentialModel::interaction_cliques() const {
  if (kind_ == PotentialKind::tilted) {
    auto cliques = base_->interaction_cliques();
    if (!g_->is_affine()) cliques.push_back(g_->support().members);
    return cliques;
  }
  std::vector<std::vector<std::size_t>> cliques;
  if (kind_ == PotentialKind::kac) {
    for (const auto& [i, j] : lattice_->bonds()) cliques.push_back({i, j});
  }
  return cliques;
}

std::string PotentialModel::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case PotentialKind::gaussian: os << "gaussian"; break;
    case PotentialKind::kac: os << "kac(nu=" << nu_ << ")"; break;
    case PotentialKind::tilted:
      os << base_->describe() << " - " << t_ << "*" << g_->describe();
      break;
  }
  return os.str();
}

PotentialModel gaussian_potential(std::shared_ptr<const LatticeSpec> lattice) {
  if (!lattice) fail(ErrorKind::invalid_input, "potential.gaussian_potential", "no lattice");
  PotentialModel m;
  m.kind_ = PotentialKind::gaussian;
  m.lattice_ = std::move(lattice);
  m.build_pattern();
  return m;
}

PotentialModel kac_potential(std::shared_ptr<const LatticeSpec> lattice, double nu) {
  if (!lattice) fail(ErrorKind::invalid_input, "potential.kac_potential", "no lattice");
  if (!(nu > 0) || !std::isfinite(nu)) {
    fail(ErrorKind::invalid_parameter, "potential.kac_potential", "nu must be positive");
  }
  PotentialModel m;
  m.kind_ = PotentialKind::kac;
  m.nu_ = nu;
  m.c_ = std::sqrt(nu / 2.0);
  const int d = lattice->dimension();
  m.lattice_ = std::move(lattice);
  if (nu >= 1.0 / (4.0 * d)) {
    std::ostringstream os;
    os << "nu=" << nu << " >= 1/(4d); the convexity margin may vanish";
    m.warnings_.push_back(os.str());
  }
  m.build_pattern();
  return m;
}

std::vector<Point> halton_samples(std::size_t n, std::size_t count, double half_width) {
  static constexpr int primes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37, 41,
                                   43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97};
  if (n > std::size(primes)) {
    fail(ErrorKind::invalid_parameter, "potential.halton_samples", "dimension too large");
  }
  std::vector<Point> out(count, Point(n));
  for (std::size_t k = 0; k < count; ++k) {
    for (std::size_t axis = 0; axis < n; ++axis) {
      const int base = primes[axis];
      double f = 1.0, r = 0.0;
      for (std::size_t i = k + 1; i > 0; i /= base) {
        f /= base;
        r += f * static_cast<double>(i % base);
      }
      out[k][axis] = -half_width + 2.0 * half_width * r;
    }
  }
  return out;
}

std::vector<Point> default_samples(std::size_t n, double half_width, std::size_t count) {
  std::vector<Point> out;
  out.reserve(count + 1);
  out.emplace_back(n, 0.0);
  for (auto& p : halton_samples(n, count, half_width)) out.push_back(std::move(p));
  return out;
}

double convexity_margin(const PotentialModel& model, const WeightFunction& weight,
                        const std::vector<Point>& samples) {
  const std::size_t n = model.size();
  if (samples.empty()) {
    fail(ErrorKind::invalid_input, "potential.convexity_margin", "no sample points");
  }
  if (weight.values.size() != n) {
    fail(ErrorKind::shape, "potential.convexity_margin", "weight not defined on all of the lattice");
  }
  double best = std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
  for (const auto& x : samples) {
    const Eigen::MatrixXd h = model.hessian(x);
    if (!h.allFinite()) {
      fail(ErrorKind::evaluation, "potential.convexity_margin", "non-finite Hessian entry");
    }
    Eigen::MatrixXd b(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) b(i, j) = h(i, j) * weight.values[j] / weight.values[i];
    }
    const Eigen::MatrixXd s = 0.5 * (b + b.transpose());
    eig.compute(s, Eigen::EigenvaluesOnly);
    best = std::min(best, eig.eigenvalues().minCoeff());
  }
  return best;
}

double tilt_bound(const PotentialModel& base, const Observable& g,
                  const std::vector<Point>& samples) {
  const double margin = convexity_margin(base, unit_weight(base.lattice()), samples);
  double sup = 0.0;
  if (!g.is_affine()) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
    for (const auto& x : samples) {
      eig.compute(g.hessian(x), Eigen::EigenvaluesOnly);
      sup = std::max(sup, eig.eigenvalues().cwiseAbs().maxCoeff());
    }
  }
  return margin / (1.0 + sup);
}

PotentialModel tilt_potential(const PotentialModel& base, const Observable& g, double t,
                              const TiltOptions& options) {
  if (!(base.lattice() == g.lattice())) {
    fail(ErrorKind::shape, "potential.tilt_potential", "observable lives on another lattice");
  }
  if (!std::isfinite(t)) fail(ErrorKind::invalid_parameter, "potential.tilt_potential", "t not finite");
  const double bound = options.bound ? *options.bound
                                     : tilt_bound(base, g, default_samples(base.size(),
                                                                           options.sample_half_width));
  PotentialModel m = TiltAccess::make(base, g, t);
  if (std::abs(t) >= bound) {
    std::ostringstream os;
    os << "|t|=" << std::abs(t) << " is not below the convexity bound T=" << bound;
    if (!options.allow_outside_bound) {
      fail(ErrorKind::convexity_risk, "potential.tilt_potential", os.str());
    }
    TiltAccess::warn(m, os.str());
  }
  return m;
}

double growth_condition_report(const PotentialModel& model, int k, double kappa,
                               const SiteSubset& s, const std::vector<Point>& samples) {
  if (k < 2) fail(ErrorKind::invalid_parameter, "potential.growth_condition_report", "k must be >= 2");
  if (k + 1 > static_cast<int>(max_order)) {
    fail(ErrorKind::unsupported_order, "potential.growth_condition_report",
         "k+1=" + std::to_string(k + 1) + " exceeds the implemented order 4");
  }
  if (s.empty()) fail(ErrorKind::empty_support, "potential.growth_condition_report", "S is empty");
  if (samples.empty()) {
    fail(ErrorKind::invalid_input, "potential.growth_condition_report", "no sample points");
  }

  // every (j, i₁..i_k) with a nonzero partial lies inside one clique
  const std::size_t order = static_cast<std::size_t>(k) + 1;
  std::set<std::vector<std::size_t>> tuples;
  for (const auto& clique : model.interaction_cliques()) {
    std::vector<std::size_t> pick(order, 0);
    while (true) {
      std::vector<std::size_t> t(order);
      for (std::size_t q = 0; q < order; ++q) t[q] = clique[pick[q]];
      tuples.insert(t);
      std::size_t q = order;
      while (q > 0 && ++pick[q - 1] == clique.size()) pick[--q] = 0;
      if (q == 0) break;
    }
  }

  std::vector<double> weights;
  weights.reserve(tuples.size());
  for (const auto& t : tuples) {
    weights.push_back(
        tuple_weight(model.lattice(), 2.0 * kappa, s, std::span<const std::size_t>(t).subspan(1)));
  }
  double best = 0.0;
  for (const auto& x : samples) {
    double sum = 0.0;
    std::size_t w = 0;
    for (const auto& t : tuples) {
      const double d = model.partial(x, t);
      sum += d * d * weights[w++];
    }
    best = std::max(best, sum);
  }
  return best;
}

}  // namespace wittenlab
