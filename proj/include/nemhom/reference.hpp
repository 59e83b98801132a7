#pragma once

#include <cstdint>
#include <vector>

#include "nemhom/solver.hpp"

namespace nemhom::ref {

// Serial reference implementations, written independently of the OpenMP
// kernels and kept for testing and benchmarking. Plain loops, explicit index
// summation, scatter-form adjoints.

// Elastic density by brute-force summation over the full 3x3x3 derivative
// array (Einstein convention expanded literally).
double f_elastic_full(const GradientSlot& d, const ElasticParams& p);

// Volume energy as one naive re-summation in node order.
VolumeParts volume_energy(const TensorField& field, const ElasticParams& elastic,
                          const BulkParams& bulk, const HomEvaluator* hom,
                          const std::vector<std::uint8_t>* occupied);

// Discrete gradient assembled scatter-style node by node.
void volume_energy_grad(const TensorField& field, const ElasticParams& elastic,
                        const BulkParams& bulk, const HomEvaluator* hom,
                        const std::vector<std::uint8_t>* occupied,
                        std::vector<double>& grad);

// Direct (non-separable) 3D discrete convolution with the same product-bump
// kernel the mollifier uses; only feasible for small grids and radii.
void convolve_direct(const GridSpec& grid, const std::vector<double>& in,
                     std::vector<double>& out, double sigma);

} // namespace nemhom::ref
