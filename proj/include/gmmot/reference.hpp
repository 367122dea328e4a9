#pragma once

#include "gmmot/distances.hpp"

namespace gmmot::reference {

// Plain serial implementations of the sliced kernels, kept as the ground
// truth the OpenMP paths are tested against (results must match bit for bit)
// and as the baseline for the kernel benchmark.

double dsmw_squared(const Gmm& mu0, const Gmm& mu1, const SliceSet& slices);
double smw_squared(const Gmm& mu0, const Gmm& mu1, const SliceSet& slices);
double msw_squared(const Gmm& mu0, const Gmm& mu1, const SliceSet& slices);
double sw_empirical_mean_pth(const PointCloud& a, const PointCloud& b,
                             const SliceSet& slices, int p);
Matrix mw_cost_matrix(const Gmm& mu0, const Gmm& mu1);

}  // namespace gmmot::reference
