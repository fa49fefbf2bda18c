#pragma once

#include "mcflab/mesh.hpp"

namespace mcflab {

// A surface (or curve) with an integer multiplicity m >= 1, representing the
// measure m * (n-dimensional Hausdorff measure restricted to the mesh).
struct WeightedComponent {
  Mesh mesh;
  int multiplicity = 1;
};

// Finite sum of weighted components, all of the same intrinsic dimension.
struct WeightedMeasure {
  std::vector<WeightedComponent> components;

  static WeightedMeasure single(Mesh mesh, int multiplicity = 1) {
    WeightedMeasure mu;
    mu.components.push_back({std::move(mesh), multiplicity});
    return mu;
  }

  int dim() const {
    if (components.empty()) throw invariant_error("measure has no components");
    return components.front().mesh.dim();
  }

  double total_weight() const {
    double w = 0.0;
    for (const WeightedComponent& c : components)
      w += (double)c.multiplicity * c.mesh.total_measure();
    return w;
  }

  double min_edge_length() const {
    double m = kInf;
    for (const WeightedComponent& c : components)
      m = std::min(m, c.mesh.min_edge_length());
    return m;
  }

  Box3 bounding_box() const {
    Box3 b;
    for (const WeightedComponent& c : components) b.expand(c.mesh.bounding_box());
    return b;
  }

  void validate(const ValidateOptions& opt = {}) const {
    if (components.empty()) throw invariant_error("measure has no components");
    const int n = components.front().mesh.dim();
    for (int i = 0; i < (int)components.size(); ++i) {
      const WeightedComponent& c = components[i];
      if (c.multiplicity < 1)
        throw invariant_error(cat("component ", i, " has multiplicity ", c.multiplicity,
                                  " (must be >= 1)"));
      if (c.mesh.dim() != n)
        throw invariant_error(cat("component ", i, " has dimension ", c.mesh.dim(),
                                  " but component 0 has dimension ", n));
      try {
        require_valid(c.mesh, opt);
      } catch (const invariant_error& e) {
        throw invariant_error(cat("component ", i, ": ", e.what()));
      }
    }
  }

  // Merges components with bitwise-identical geometry by summing their
  // multiplicities, so that e.g. (m-1)*S + S collapses to m*S exactly.
  WeightedMeasure canonicalized() const {
    WeightedMeasure out;
    for (const WeightedComponent& c : components) {
      bool merged = false;
      for (WeightedComponent& o : out.components)
        if (identical_meshes(o.mesh, c.mesh)) {
          o.multiplicity += c.multiplicity;
          merged = true;
          break;
        }
      if (!merged) out.components.push_back(c);
    }
    return out;
  }
};

}  // namespace mcflab
