#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "nemhom/energy.hpp"
#include "nemhom/grid.hpp"
#include "nemhom/homogenize.hpp"

namespace nemhom {

struct EnergyReport {
    double elastic = 0.0;
    double bulk = 0.0;
    double homogenized = 0.0;
    double surface = 0.0;
    double total = 0.0;
    long iterations = 0;
    double grad_norm = 0.0;
    bool converged = false;
    std::string status;
};

struct SolveOptions {
    enum class Method { GradientDescent, LBFGS };
    Method method = Method::LBFGS;
    long max_iterations = 100000;
    double grad_tol = 1e-8; // on the sup norm of the discrete gradient
    int lbfgs_memory = 8;
    bool record_trace = false;
};

// Masked volume integral of f_e + f_b (+ f_hom when an evaluator is given):
// trapezoidal node weights, gradients by central differences falling back to
// one-sided stencils at grid faces and next to occupied nodes, so the value
// depends only on unoccupied nodes. occupied == nullptr means no mask.
// Deterministic: partial sums per x-slab, combined in fixed order, so results
// are bitwise independent of the OpenMP thread count.
struct VolumeParts {
    double elastic = 0.0, bulk = 0.0, homogenized = 0.0;
    double sum() const { return elastic + bulk + homogenized; }
};
VolumeParts volume_energy(const TensorField& field, const ElasticParams& elastic,
                          const BulkParams& bulk, const HomEvaluator* hom,
                          const std::vector<std::uint8_t>* occupied);

// Exact gradient of the discrete volume energy (adjoint of the same
// stencils), written into grad (size 5 * node_count, overwritten). Zero at
// Dirichlet (container-boundary) nodes and at occupied nodes.
void volume_energy_grad(const TensorField& field, const ElasticParams& elastic,
                        const BulkParams& bulk, const HomEvaluator* hom,
                        const std::vector<std::uint8_t>* occupied,
                        std::vector<double>& grad);

EnergyReport energy_f0(const TensorField& field, const ElasticParams& elastic,
                       const BulkParams& bulk, const HomEvaluator& hom);
void energy_grad_f0(const TensorField& field, const ElasticParams& elastic,
                    const BulkParams& bulk, const HomEvaluator& hom,
                    std::vector<double>& grad);

// Generic descent on the field's free coefficients. Energy/gradient callbacks
// see the whole field; gradients must vanish on Dirichlet nodes (the ones
// above do). Line search is Armijo backtracking; every accepted step strictly
// decreases the energy. Deterministic given the initial state and options.
using EnergyFn = std::function<double(const TensorField&)>;
using GradFn = std::function<void(const TensorField&, std::vector<double>&)>;

EnergyReport minimize_field(TensorField& field, const EnergyFn& energy,
                            const GradFn& gradient, const SolveOptions& options,
                            std::vector<double>* energy_trace = nullptr);

// Minimise the homogenised functional with Dirichlet data held by the field.
EnergyReport minimize_f0(TensorField& field, const ElasticParams& elastic,
                         const BulkParams& bulk, const HomEvaluator& hom,
                         const SolveOptions& options,
                         std::vector<double>* energy_trace = nullptr);

void write_energy_trace_csv(const std::string& path,
                            const std::vector<double>& trace);

} // namespace nemhom
