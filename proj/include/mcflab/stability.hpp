#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "mcflab/differential.hpp"
#include "mcflab/normal_graph.hpp"

namespace mcflab {

using SparseMat = Eigen::SparseMatrix<double>;

// Discretization of the drift stability operator
//   L f = laplace f - <x, grad f>/2 + (|A|^2 + 1/2) f
// in weak Gaussian-weighted form: the drift term is absorbed by weighting the
// cotangent stiffness with rho = exp(-|x|^2/4) (averaged per triangle), and
// the mass matrix is the lumped rho-weighted vertex measure.
struct StabilityOperator {
  SparseMat stiffness;        // S_rho, positive semidefinite
  Eigen::VectorXd mass;       // lumped rho-weighted measures, positive
  Eigen::VectorXd potential;  // |A|^2 + 1/2 per vertex

  int size() const { return (int)mass.size(); }

  // A f = -S_rho f + M_rho (potential .* f); the pencil is A v = mu M v.
  Eigen::VectorXd apply(const Eigen::VectorXd& f) const {
    return -(stiffness * f) + mass.cwiseProduct(potential.cwiseProduct(f));
  }

  double rayleigh(const Eigen::VectorXd& f) const {
    return f.dot(apply(f)) / f.dot(mass.cwiseProduct(f));
  }

  // Relative strong-form residual |M^-1 A f - mu f| / |f|.
  double residual(const Eigen::VectorXd& f, double mu) const {
    const Eigen::VectorXd r = apply(f).cwiseQuotient(mass) - mu * f;
    return r.norm() / f.norm();
  }
};

inline StabilityOperator build_stability_operator(const Mesh& mesh,
                                                  const DifferentialQuantities& dq) {
  if (mesh.is_curve())
    throw invariant_error("stability operator is only assembled for surface meshes");
  const int nv = (int)mesh.vertices.size();
  Eigen::VectorXd rho(nv);
  for (int i = 0; i < nv; ++i) rho[i] = std::exp(-mesh.vertices[i].squaredNorm() / 4.0);

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(mesh.triangles.size() * 12);
  for (const Tri& f : mesh.triangles) {
    const double rho_t = (rho[f[0]] + rho[f[1]] + rho[f[2]]) / 3.0;
    for (int k = 0; k < 3; ++k) {
      const int i = f[k], j = f[(k + 1) % 3], o = f[(k + 2) % 3];
      const double w = 0.5 * rho_t * detail::cot(mesh.vertices[i] - mesh.vertices[o],
                                                 mesh.vertices[j] - mesh.vertices[o]);
      trip.emplace_back(i, i, w);
      trip.emplace_back(j, j, w);
      trip.emplace_back(i, j, -w);
      trip.emplace_back(j, i, -w);
    }
  }

  StabilityOperator op;
  op.stiffness.resize(nv, nv);
  op.stiffness.setFromTriplets(trip.begin(), trip.end());
  op.mass.resize(nv);
  op.potential.resize(nv);
  for (int i = 0; i < nv; ++i) {
    op.mass[i] = dq.vertex_weight[i] * rho[i];
    op.potential[i] = dq.second_fundamental_sq[i] + 0.5;
  }
  return op;
}

struct StabilitySpectrum {
  std::vector<double> eigenvalues;               // descending
  std::vector<Eigen::VectorXd> eigenfunctions;   // M-orthonormal
  double top_residual = 0.0;
  int iterations = 0;
};

// Leading generalized eigenpairs of A v = mu M v by shifted inverse power
// iteration: with sigma above the spectrum, K = sigma M - A is positive
// definite and K^-1 M has its largest eigenvalue at the top of the pencil.
// Deterministic start vectors, deflation through M-orthogonalization.
inline StabilitySpectrum stability_spectrum(const Mesh& mesh, const StabilityOperator& op,
                                            int n_pairs = 1, int max_iters = 600,
                                            double tol = 1e-9) {
  const int nv = op.size();
  n_pairs = std::min(n_pairs, 6);
  // Rayleigh quotients are bounded by max potential since -S_rho <= 0
  const double sigma = op.potential.maxCoeff() + 1.0;

  SparseMat k_mat = op.stiffness;  // sigma M - A = S + M (sigma - potential)
  for (int i = 0; i < nv; ++i)
    k_mat.coeffRef(i, i) += op.mass[i] * (sigma - op.potential[i]);
  k_mat.makeCompressed();
  Eigen::SimplicialLDLT<SparseMat> solver(k_mat);
  if (solver.info() != Eigen::Success)
    throw invariant_error("stability operator factorization failed");

  auto m_dot = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return a.dot(op.mass.cwiseProduct(b));
  };

  StabilitySpectrum spec;
  for (int pair = 0; pair < n_pairs; ++pair) {
    Eigen::VectorXd v(nv);
    switch (pair) {  // deterministic, mutually non-parallel seeds
      case 0: v.setOnes(); break;
      case 1: for (int i = 0; i < nv; ++i) v[i] = mesh.vertices[i][0]; break;
      case 2: for (int i = 0; i < nv; ++i) v[i] = mesh.vertices[i][1]; break;
      case 3: for (int i = 0; i < nv; ++i) v[i] = mesh.vertices[i][2]; break;
      case 4:
        for (int i = 0; i < nv; ++i)
          v[i] = mesh.vertices[i][0] * mesh.vertices[i][0] -
                 mesh.vertices[i][1] * mesh.vertices[i][1];
        break;
      default:
        for (int i = 0; i < nv; ++i) v[i] = mesh.vertices[i][0] * mesh.vertices[i][1];
        break;
    }
    for (const Eigen::VectorXd& u : spec.eigenfunctions) v -= m_dot(u, v) * u;
    double norm = std::sqrt(std::max(m_dot(v, v), 0.0));
    if (!(norm > 1e-12)) {  // seed swallowed by deflation; fall back to a comb
      for (int i = 0; i < nv; ++i) v[i] = (i % (pair + 2) == 0) ? 1.0 : -0.5;
      for (const Eigen::VectorXd& u : spec.eigenfunctions) v -= m_dot(u, v) * u;
      norm = std::sqrt(std::max(m_dot(v, v), 1e-300));
    }
    v /= norm;

    double mu = op.rayleigh(v);
    int it = 0;
    for (; it < max_iters; ++it) {
      Eigen::VectorXd w = solver.solve(op.mass.cwiseProduct(v));
      for (const Eigen::VectorXd& u : spec.eigenfunctions) w -= m_dot(u, w) * u;
      const double wn = std::sqrt(std::max(m_dot(w, w), 1e-300));
      v = w / wn;
      mu = op.rayleigh(v);
      if (op.residual(v, mu) < tol) break;
    }
    if (pair == 0) {
      spec.top_residual = op.residual(v, mu);
      spec.iterations = it;
    }
    spec.eigenvalues.push_back(mu);
    spec.eigenfunctions.push_back(v);
  }
  return spec;
}

struct UnstableDirection {
  PerturbationField field;      // positive, sup-normalized to 1
  double eigenvalue = 0.0;
  bool sphere_shortcut = false;
  double shrinker_rel_residual = 0.0;
  double asphericity = 0.0;
};

inline double mesh_asphericity(const Mesh& mesh) {
  Vec3 c = Vec3::Zero();
  double w = 0.0;
  if (mesh.is_curve()) {
    for (int s = 0; s < (int)mesh.segments.size(); ++s) {
      const double len = mesh.segment_length(s);
      c += 0.5 * len * (mesh.vertices[mesh.segments[s][0]] + mesh.vertices[mesh.segments[s][1]]);
      w += len;
    }
  } else {
    for (int t = 0; t < (int)mesh.triangles.size(); ++t) {
      const double a = mesh.triangle_area(t);
      c += a * mesh.triangle_centroid(t);
      w += a;
    }
  }
  c /= std::max(w, 1e-300);
  double lo = kInf, hi = 0.0, sum = 0.0;
  for (const Vec3& v : mesh.vertices) {
    const double r = (v - c).norm();
    lo = std::min(lo, r);
    hi = std::max(hi, r);
    sum += r;
  }
  return (hi - lo) / std::max(sum / (double)mesh.vertices.size(), 1e-300);
}

// Entropy-unstable variation direction of a discrete shrinker.  Round
// surfaces take the constant shortcut f = 1 (the radial variation); anything
// else takes the most-unstable eigenfunction of the stability operator,
// sign-normalized positive with sup-norm one.
inline UnstableDirection unstable_direction(const Mesh& mesh, double residual_gate = 0.05,
                                            double asphericity_gate = 0.01) {
  const DifferentialQuantities dq = differential_quantities(mesh);
  UnstableDirection out;
  const ShrinkerResidual res = shrinker_residual(mesh, dq);
  out.shrinker_rel_residual = res.relative();
  if (!(out.shrinker_rel_residual < residual_gate))
    throw invariant_error(cat("surface is not a discrete shrinker: relative residual ",
                              out.shrinker_rel_residual, " >= ", residual_gate));
  out.asphericity = mesh_asphericity(mesh);

  const StabilityOperator op = build_stability_operator(mesh, dq);
  if (out.asphericity < asphericity_gate) {
    out.sphere_shortcut = true;
    out.field = PerturbationField::constant(mesh, 1.0);
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(op.size());
    out.eigenvalue = op.rayleigh(ones);
    return out;
  }

  const StabilitySpectrum spec = stability_spectrum(mesh, op, 1);
  Eigen::VectorXd f = spec.eigenfunctions.front();
  if (f.dot(op.mass) < 0.0) f = -f;
  const double sup = f.cwiseAbs().maxCoeff();
  f /= std::max(sup, 1e-300);
  if (f.minCoeff() <= 0.0) {
    const StabilitySpectrum wide = stability_spectrum(mesh, op, 5);
    std::string eigs;
    for (double mu : wide.eigenvalues) eigs += cat(" ", mu);
    throw invariant_error(cat("top eigenfunction is not sign-definite (min ", f.minCoeff(),
                              " after normalization); leading eigenvalues:", eigs));
  }
  out.eigenvalue = spec.eigenvalues.front();
  out.field.values.assign(f.data(), f.data() + f.size());
  out.field.support.assign(f.size(), true);
  return out;
}

}  // namespace mcflab
