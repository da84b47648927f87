#pragma once

#include <initializer_list>
#include <vector>

#include "sgp/potentials.hpp"

namespace sgp::presets {

/// Scalar potentials Phi_i(theta) = (theta - c_i)^2 / 2, one per centre.
template <typename Scalar = double>
PotentialSet<Scalar> scalar_quadratics(std::initializer_list<Scalar> centres) {
  std::vector<LeastSquaresBlock<Scalar>> blocks;
  for (Scalar c : centres) {
    blocks.push_back({MatrixX<Scalar>::Ones(1, 1), VectorX<Scalar>::Constant(1, c)});
  }
  return from_least_squares(blocks);
}

/// Three potentials centred at -2, 1.5 and 2; the minimiser of their mean is 0.5.
template <typename Scalar = double>
PotentialSet<Scalar> toy_three_well() {
  return scalar_quadratics<Scalar>({Scalar(-2), Scalar(1.5), Scalar(2)});
}

/// Two potentials centred at +1 and -1; the full flow is stationary at 0.
template <typename Scalar = double>
PotentialSet<Scalar> symmetric_pair() {
  return scalar_quadratics<Scalar>({Scalar(1), Scalar(-1)});
}

/// Two phenotypes in two environments: in environment k phenotype k grows at
/// rate 1 and the other at 0.1, and organisms switch phenotype at rate 0.05.
/// Each matrix is diag(f) + H with H carrying minus its column sums on the
/// diagonal.
template <typename Scalar = double>
std::vector<MatrixX<Scalar>> population_switching() {
  const Scalar s = Scalar(0.05);
  std::vector<MatrixX<Scalar>> g;
  for (int k = 0; k < 2; ++k) {
    MatrixX<Scalar> m(2, 2);
    m << -s, s, s, -s;
    m(k, k) += Scalar(1);
    m(1 - k, 1 - k) += Scalar(0.1);
    g.push_back(m);
  }
  return g;
}

} // namespace sgp::presets
