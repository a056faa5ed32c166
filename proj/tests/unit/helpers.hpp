#pragma once

#include <cmath>
#include <cstddef>

#include "exlg/matrixcore.hpp"
#include "exlg/rng.hpp"

namespace testutil {

inline exlg::SymMatrix random_sym(std::size_t n, exlg::Rng& rng, double scale = 1.0) {
  exlg::Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) a(i, j) = a(j, i) = scale * rng.normal();
  return exlg::SymMatrix(a);
}

// G·Gᵀ + floor·I
inline exlg::SymMatrix random_psd(std::size_t n, exlg::Rng& rng, double floor = 0.0) {
  exlg::Matrix g(n, n);
  for (double& v : g.data()) v = rng.normal();
  exlg::Matrix p = g * g.transpose();
  for (std::size_t i = 0; i < n; ++i) p(i, i) += floor;
  return exlg::SymMatrix(p);
}

inline exlg::Vector random_vec(std::size_t n, exlg::Rng& rng, double scale = 1.0) {
  exlg::Vector v(n);
  for (double& x : v) x = scale * rng.normal();
  return v;
}

inline double max_diff(const exlg::SymMatrix& a, const exlg::SymMatrix& b) {
  return exlg::max_abs_diff(a.matrix(), b.matrix());
}

}  // namespace testutil
