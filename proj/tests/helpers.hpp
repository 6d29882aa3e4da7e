#pragma once

#include "lgc/harmonic.hpp"

#include <random>

namespace lgc::test {

inline Section random_section(const GridLayout& grid, int components, int n, std::mt19937_64& rng,
                              double scale = 1.0) {
  Section y(FiberSignature{components, n}, grid.num_vertices());
  for (VertexId v = 0; v < grid.num_vertices(); ++v) {
    Fiber f;
    for (int k = 0; k < components; ++k) f.push_back(random_group(n, rng, scale));
    y.set(v, std::move(f));
  }
  return y;
}

inline Section identity_section(const GridLayout& grid, int components, int n) {
  Section y(FiberSignature{components, n}, grid.num_vertices());
  for (VertexId v = 0; v < grid.num_vertices(); ++v) y.set(v, Fiber(components, GroupElement::identity(n)));
  return y;
}

inline Variation random_variation(const GridLayout& grid, int components, int n, std::mt19937_64& rng) {
  Variation dy(FiberSignature{components, n}, grid.num_vertices());
  for (VertexId v = 0; v < grid.num_vertices(); ++v) {
    FiberVariation f;
    for (int k = 0; k < components; ++k) f.push_back(random_algebra(n, rng));
    dy.set(v, std::move(f));
  }
  return dy;
}

inline Multiplier random_multiplier(const GridLayout& grid, int n, std::mt19937_64& rng) {
  Multiplier m(n, grid.num_faces());
  for (FaceId f = 0; f < grid.num_faces(); ++f) m.set(f, CoAlgebraElement(random_algebra(n, rng).matrix()));
  return m;
}

inline SolverConfig random_config(const GridLayout& grid, int n, std::uint64_t seed, double scale = 0.1) {
  SolverConfig c;
  c.boundary = random_boundary(grid, n, seed, scale);
  return c;
}

}  // namespace lgc::test
