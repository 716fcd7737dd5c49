#include "wittenlab/oracle.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "wittenlab/detail/grid_loops.hpp"
#include "wittenlab/error.hpp"

namespace wittenlab {

namespace {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

// W⁽⁰⁾ blocks on the diagonal, Hessian couplings between components. With
// `components` = 1 only the scalar operator is built.
SparseMatrix assemble(const WittenSystem& sys, std::size_t components, const char* where) {
  const GridSpec& g = *sys.grid();
  const std::size_t nodes = g.total_points;
  const std::size_t unknowns = nodes * components;
  if (unknowns > dense_unknown_limit) {
    std::ostringstream os;
    os << unknowns << " unknowns exceed the direct-solve limit of " << dense_unknown_limit;
    fail(ErrorKind::resource, where, os.str());
  }
  const SampledPotential& sp = sys.sampled();
  const int m = g.points_per_site;
  const double h2 = g.spacing * g.spacing;
  const bool fourth = g.stencil_order == 4;
  const double centre = detail::laplacian_diagonal(g, g.stencil_order);

  std::vector<Eigen::Triplet<double, int>> trip;
  trip.reserve(unknowns * (1 + 4 * g.dims()) + nodes * sp.pattern.size() * 2);
  for (std::size_t c = 0; c < components; ++c) {
    const std::size_t off = c * nodes;
    for (std::size_t i = 0; i < nodes; ++i) {
      const int row = static_cast<int>(off + i);
      trip.emplace_back(row, row, centre + sp.witten[i]);
      for (std::size_t a = 0; a < g.dims(); ++a) {
        const int k = g.axis_index(i, a);
        const std::size_t s = g.strides[a];
        auto add = [&](int shift, double coeff) {
          const int kk = k + shift;
          if (kk < 0 || kk >= m) return;
          const std::size_t j = static_cast<std::size_t>(static_cast<long long>(i) + shift * static_cast<long long>(s));
          trip.emplace_back(row, static_cast<int>(off + j), coeff);
        };
        if (fourth) {
          add(-1, -16.0 / (12.0 * h2));
          add(+1, -16.0 / (12.0 * h2));
          add(-2, 1.0 / (12.0 * h2));
          add(+2, 1.0 / (12.0 * h2));
        } else {
          add(-1, -1.0 / h2);
          add(+1, -1.0 / h2);
        }
      }
    }
  }
  if (components > 1) {
    const std::size_t np = sp.pattern.size();
    for (std::size_t i = 0; i < nodes; ++i) {
      for (std::size_t k = 0; k < np; ++k) {
        const auto [a, b] = sp.pattern[k];
        const double v = sp.hessian[i * np + k];
        const int ra = static_cast<int>(a * nodes + i), rb = static_cast<int>(b * nodes + i);
        trip.emplace_back(ra, rb, v);
        if (a != b) trip.emplace_back(rb, ra, v);
      }
    }
  }
  SparseMatrix A(static_cast<int>(unknowns), static_cast<int>(unknowns));
  A.setFromTriplets(trip.begin(), trip.end());
  A.makeCompressed();
  return A;
}

Eigen::VectorXd lu_solve(const SparseMatrix& A, const Eigen::VectorXd& b, const char* where) {
  Eigen::SparseLU<SparseMatrix> lu;
  lu.analyzePattern(A);
  lu.factorize(A);
  if (lu.info() != Eigen::Success) fail(ErrorKind::definiteness, where, "matrix is singular");
  Eigen::VectorXd x = lu.solve(b);
  if (lu.info() != Eigen::Success || !x.allFinite()) fail(ErrorKind::definiteness, where, "direct solve failed");
  return x;
}

}  // namespace

OneFormField dense_solve_w1(const WittenSystem& sys, const OneFormField& rhs) {
  const char* where = "oracle.dense_solve_w1";
  require_same_grid(*sys.grid(), *rhs.grid, where);
  const SparseMatrix A = assemble(sys, sys.grid()->dims(), where);
  const Eigen::Map<const Eigen::VectorXd> b(rhs.values.data(), static_cast<Eigen::Index>(rhs.values.size()));
  const Eigen::VectorXd x = lu_solve(A, b, where);
  OneFormField out(sys.grid());
  Eigen::Map<Eigen::VectorXd>(out.values.data(), x.size()) = x;
  return out;
}

ScalarField dense_solve_w0_projected(const WittenSystem& sys, const ScalarField& rhs) {
  const char* where = "oracle.dense_solve_w0";
  require_same_grid(*sys.grid(), *rhs.grid, where);
  const SparseMatrix W = assemble(sys, 1, where);
  const auto& psi = sys.ground().field.values;
  const int n = static_cast<int>(psi.size());

  // [W ψ; ψᵀ 0][u; λ] = [P rhs; 0], P the projection off ψ
  std::vector<Eigen::Triplet<double, int>> trip;
  trip.reserve(static_cast<std::size_t>(W.nonZeros()) + 2 * psi.size());
  for (int k = 0; k < W.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(W, k); it; ++it) trip.emplace_back(it.row(), it.col(), it.value());
  }
  for (int i = 0; i < n; ++i) {
    trip.emplace_back(i, n, psi[i]);
    trip.emplace_back(n, i, psi[i]);
  }
  SparseMatrix B(n + 1, n + 1);
  B.setFromTriplets(trip.begin(), trip.end());
  B.makeCompressed();

  const double pp = dot(psi, psi);
  const double c = dot(rhs.values, psi) / pp;
  Eigen::VectorXd b(n + 1);
  for (int i = 0; i < n; ++i) b[i] = rhs.values[i] - c * psi[i];
  b[n] = 0.0;
  const Eigen::VectorXd x = lu_solve(B, b, where);
  ScalarField out(sys.grid());
  for (int i = 0; i < n; ++i) out.values[i] = x[i];
  return out;
}

double dense_w1_lowest_eigenvalue(const WittenSystem& sys) {
  const char* where = "oracle.dense_w1_lowest_eigenvalue";
  const std::size_t unknowns = sys.grid()->total_points * sys.grid()->dims();
  if (unknowns > 6000) {
    fail(ErrorKind::resource, where, "dense eigensolve is limited to 6000 unknowns");
  }
  const Eigen::MatrixXd A = Eigen::MatrixXd(assemble(sys, sys.grid()->dims(), where));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) fail(ErrorKind::evaluation, where, "eigensolver failed");
  return es.eigenvalues()[0];
}

FdDerivative fd_theta_derivative(const PerturbedSystem& sys, int n, double step) {
  const char* where = "oracle.fd_theta_derivative";
  if (n < 1 || n > 4) fail(ErrorKind::unsupported_order, where, "finite differences cover n = 1..4");
  if (!(step > 0.0) || !std::isfinite(step)) fail(ErrorKind::invalid_parameter, where, "step must be positive");
  const double extent = n <= 2 ? step : 2.0 * step;
  if (std::abs(sys.t) + extent >= sys.bound_T) {
    std::ostringstream os;
    os << "stencil reaches |t| = " << std::abs(sys.t) + extent << ", not below T = " << sys.bound_T;
    fail(ErrorKind::window, where, os.str());
  }
  auto theta = [&](double s) { return log_partition_at(sys, sys.t + s); };
  auto diff = [&](double h) {
    switch (n) {
      case 1: return (theta(h) - theta(-h)) / (2.0 * h);
      case 2: return (theta(h) - 2.0 * theta(0.0) + theta(-h)) / (h * h);
      case 3: return (theta(2 * h) - 2.0 * theta(h) + 2.0 * theta(-h) - theta(-2 * h)) / (2.0 * h * h * h);
      default:
        return (theta(2 * h) - 4.0 * theta(h) + 6.0 * theta(0.0) - 4.0 * theta(-h) + theta(-2 * h)) /
               (h * h * h * h);
    }
  };
  FdDerivative out;
  out.coarse = diff(step);
  out.fine = diff(0.5 * step);
  out.value = (4.0 * out.fine - out.coarse) / 3.0;
  out.error_estimate = std::abs(out.value - out.fine);
  return out;
}

OneFormField fd_v_derivative(const PerturbedSystem& sys, double epsilon, const SolverConfig& cfg) {
  const char* where = "oracle.fd_v_derivative";
  if (epsilon == 0.0 || !std::isfinite(epsilon)) fail(ErrorKind::invalid_parameter, where, "epsilon must be nonzero");
  if (std::abs(sys.t + epsilon) >= sys.bound_T) fail(ErrorKind::window, where, "t + epsilon leaves the convexity window");
  const PerturbedSystem next = retilt(sys, sys.t + epsilon);
  const auto [v0, r0] = sys.tilted->solve_w1(sys.tilted->weighted_gradient(sys.g), cfg);
  const auto [v1, r1] = next.tilted->solve_w1(next.tilted->weighted_gradient(sys.g), cfg);
  if (!r0.converged || !r1.converged) fail(ErrorKind::non_convergence, where, "one-form solve did not converge");
  const ScalarField gv = sample_observable(sys.grid(), sys.g);
  const std::size_t nodes = sys.grid()->total_points;
  OneFormField out(sys.grid());
  for (std::size_t k = 0; k < out.values.size(); ++k) {
    const double back = std::exp(-0.5 * epsilon * gv.values[k % nodes]);
    out.values[k] = (v1.values[k] * back - v0.values[k]) / epsilon;
  }
  return out;
}

}  // namespace wittenlab
