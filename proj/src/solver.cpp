#include "nemhom/solver.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace nemhom {

namespace {

struct StencilInfo {
    // Per axis: -1 backward, 0 central, +1 forward, 2 degenerate (derivative 0)
    int type[3];
};

inline bool avail(const GridSpec& g, const std::vector<std::uint8_t>* occ, int i, int j,
                  int k) {
    if (i < 0 || j < 0 || k < 0 || i >= g.n[0] || j >= g.n[1] || k >= g.n[2])
        return false;
    return !occ || !(*occ)[g.index(i, j, k)];
}

inline StencilInfo stencil_at(const GridSpec& g, const std::vector<std::uint8_t>* occ,
                              int i, int j, int k) {
    StencilInfo s;
    const int idx[3] = {i, j, k};
    for (int d = 0; d < 3; ++d) {
        int lo[3] = {i, j, k}, hi[3] = {i, j, k};
        --lo[d];
        ++hi[d];
        const bool m = avail(g, occ, lo[0], lo[1], lo[2]);
        const bool p = avail(g, occ, hi[0], hi[1], hi[2]);
        if (m && p)
            s.type[d] = 0;
        else if (p)
            s.type[d] = +1;
        else if (m)
            s.type[d] = -1;
        else
            s.type[d] = 2;
        (void)idx;
    }
    return s;
}

inline GradientSlot gradient_at(const TensorField& f,
                                const std::vector<std::uint8_t>* occ, int i, int j,
                                int k, const StencilInfo& st) {
    GradientSlot d;
    const GridSpec& g = f.grid;
    const std::size_t c = g.index(i, j, k);
    const std::size_t stride[3] = {std::size_t(g.n[1]) * g.n[2], std::size_t(g.n[2]), 1};
    (void)occ;
    for (int axis = 0; axis < 3; ++axis) {
        const double h = g.h[axis];
        switch (st.type[axis]) {
        case 0:
            for (int m = 0; m < 5; ++m)
                d.d[axis].c[m] = (f.coeff[5 * (c + stride[axis]) + m] -
                                  f.coeff[5 * (c - stride[axis]) + m]) /
                                 (2.0 * h);
            break;
        case +1:
            for (int m = 0; m < 5; ++m)
                d.d[axis].c[m] =
                    (f.coeff[5 * (c + stride[axis]) + m] - f.coeff[5 * c + m]) / h;
            break;
        case -1:
            for (int m = 0; m < 5; ++m)
                d.d[axis].c[m] =
                    (f.coeff[5 * c + m] - f.coeff[5 * (c - stride[axis]) + m]) / h;
            break;
        default:
            break; // zero slot
        }
    }
    return d;
}

} // namespace

VolumeParts volume_energy(const TensorField& field, const ElasticParams& elastic,
                          const BulkParams& bulk, const HomEvaluator* hom,
                          const std::vector<std::uint8_t>* occupied) {
    const GridSpec& g = field.grid;
    const int nx = g.n[0];
    std::vector<double> pe(nx, 0.0), pb(nx, 0.0), ph(nx, 0.0);

#pragma omp parallel for schedule(static)
    for (int i = 0; i < nx; ++i) {
        double se = 0.0, sb = 0.0, sh = 0.0;
        for (int j = 0; j < g.n[1]; ++j)
            for (int k = 0; k < g.n[2]; ++k) {
                const std::size_t c = g.index(i, j, k);
                if (occupied && (*occupied)[c]) continue;
                const double w = g.weight(i, j, k);
                const StencilInfo st = stencil_at(g, occupied, i, j, k);
                const GradientSlot d = gradient_at(field, occupied, i, j, k, st);
                const QTensor q = field.at(c);
                se += w * f_elastic(d, elastic);
                sb += w * f_bulk(q, bulk);
                if (hom && !hom->empty()) sh += w * hom->value(q, g.position(i, j, k));
            }
        pe[i] = se;
        pb[i] = sb;
        ph[i] = sh;
    }
    VolumeParts parts;
    for (int i = 0; i < nx; ++i) {
        parts.elastic += pe[i];
        parts.bulk += pb[i];
        parts.homogenized += ph[i];
    }
    return parts;
}

void volume_energy_grad(const TensorField& field, const ElasticParams& elastic,
                        const BulkParams& bulk, const HomEvaluator* hom,
                        const std::vector<std::uint8_t>* occupied,
                        std::vector<double>& grad) {
    const GridSpec& g = field.grid;
    const std::size_t n = g.node_count();
    grad.assign(5 * n, 0.0);

    // Pass 1: weighted elastic derivative slots per node, plus the pointwise
    // bulk / homogenised terms (per-node writes only, no races).
    std::vector<double> eslots(15 * n, 0.0);

#pragma omp parallel for schedule(static)
    for (int i = 0; i < g.n[0]; ++i)
        for (int j = 0; j < g.n[1]; ++j)
            for (int k = 0; k < g.n[2]; ++k) {
                const std::size_t c = g.index(i, j, k);
                if (occupied && (*occupied)[c]) continue;
                const double w = g.weight(i, j, k);
                const StencilInfo st = stencil_at(g, occupied, i, j, k);
                const GradientSlot d = gradient_at(field, occupied, i, j, k, st);
                const GradientSlot eg = f_elastic_grad(d, elastic);
                for (int axis = 0; axis < 3; ++axis)
                    for (int m = 0; m < 5; ++m)
                        eslots[15 * c + 5 * axis + m] = w * eg.d[axis].c[m];
                const QTensor q = field.at(c);
                QTensor local = f_bulk_grad(q, bulk);
                if (hom && !hom->empty()) local += hom->grad(q, g.position(i, j, k));
                for (int m = 0; m < 5; ++m) grad[5 * c + m] = w * local.c[m];
            }

    // Pass 2: gather the stencil adjoint. Node p receives elastic-slot
    // contributions from itself (one-sided stencils) and from neighbours
    // whose difference stencil references it.
    const std::size_t stride[3] = {std::size_t(g.n[1]) * g.n[2], std::size_t(g.n[2]), 1};

#pragma omp parallel for schedule(static)
    for (int i = 0; i < g.n[0]; ++i)
        for (int j = 0; j < g.n[1]; ++j)
            for (int k = 0; k < g.n[2]; ++k) {
                const std::size_t p = g.index(i, j, k);
                if (occupied && (*occupied)[p]) continue;
                const int idx[3] = {i, j, k};
                for (int d = 0; d < 3; ++d) {
                    const double h = g.h[d];
                    // self-term
                    {
                        const StencilInfo st = stencil_at(g, occupied, i, j, k);
                        if (st.type[d] == +1)
                            for (int m = 0; m < 5; ++m)
                                grad[5 * p + m] -= eslots[15 * p + 5 * d + m] / h;
                        else if (st.type[d] == -1)
                            for (int m = 0; m < 5; ++m)
                                grad[5 * p + m] += eslots[15 * p + 5 * d + m] / h;
                    }
                    // lower neighbour n = p - e_d references p when central or forward
                    if (idx[d] > 0) {
                        int nn[3] = {i, j, k};
                        --nn[d];
                        if (avail(g, occupied, nn[0], nn[1], nn[2])) {
                            const StencilInfo st =
                                stencil_at(g, occupied, nn[0], nn[1], nn[2]);
                            const std::size_t cn = p - stride[d];
                            if (st.type[d] == 0)
                                for (int m = 0; m < 5; ++m)
                                    grad[5 * p + m] +=
                                        eslots[15 * cn + 5 * d + m] / (2.0 * h);
                            else if (st.type[d] == +1)
                                for (int m = 0; m < 5; ++m)
                                    grad[5 * p + m] += eslots[15 * cn + 5 * d + m] / h;
                        }
                    }
                    // upper neighbour n = p + e_d references p when central or backward
                    if (idx[d] < g.n[d] - 1) {
                        int nn[3] = {i, j, k};
                        ++nn[d];
                        if (avail(g, occupied, nn[0], nn[1], nn[2])) {
                            const StencilInfo st =
                                stencil_at(g, occupied, nn[0], nn[1], nn[2]);
                            const std::size_t cn = p + stride[d];
                            if (st.type[d] == 0)
                                for (int m = 0; m < 5; ++m)
                                    grad[5 * p + m] -=
                                        eslots[15 * cn + 5 * d + m] / (2.0 * h);
                            else if (st.type[d] == -1)
                                for (int m = 0; m < 5; ++m)
                                    grad[5 * p + m] -= eslots[15 * cn + 5 * d + m] / h;
                        }
                    }
                }
            }

    // Dirichlet nodes are fixed.
#pragma omp parallel for schedule(static)
    for (int i = 0; i < g.n[0]; ++i)
        for (int j = 0; j < g.n[1]; ++j)
            for (int k = 0; k < g.n[2]; ++k)
                if (g.on_boundary(i, j, k)) {
                    const std::size_t c = g.index(i, j, k);
                    for (int m = 0; m < 5; ++m) grad[5 * c + m] = 0.0;
                }
}

EnergyReport energy_f0(const TensorField& field, const ElasticParams& elastic,
                       const BulkParams& bulk, const HomEvaluator& hom) {
    const VolumeParts parts = volume_energy(field, elastic, bulk, &hom, nullptr);
    EnergyReport r;
    r.elastic = parts.elastic;
    r.bulk = parts.bulk;
    r.homogenized = parts.homogenized;
    r.total = r.elastic + r.bulk + r.homogenized + r.surface;
    return r;
}

void energy_grad_f0(const TensorField& field, const ElasticParams& elastic,
                    const BulkParams& bulk, const HomEvaluator& hom,
                    std::vector<double>& grad) {
    volume_energy_grad(field, elastic, bulk, &hom, nullptr, grad);
}

namespace {

double sup_norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s = std::max(s, std::abs(x));
    return s;
}

double dot_vec(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

} // namespace

EnergyReport minimize_field(TensorField& field, const EnergyFn& energy,
                            const GradFn& gradient, const SolveOptions& options,
                            std::vector<double>* energy_trace) {
    const std::size_t dof = field.coeff.size();
    std::vector<double> g(dof), dir(dof), x_old(dof), g_old(dof);
    std::deque<std::pair<std::vector<double>, std::vector<double>>> memory; // (s, y)
    std::deque<double> rho;

    double f = energy(field);
    gradient(field, g);
    if (energy_trace) energy_trace->push_back(f);

    EnergyReport report;
    report.status = "running";
    const double c1 = 1e-4;
    double gd_step = 1.0;
    int stalled = 0;

    long it = 0;
    for (; it < options.max_iterations; ++it) {
        const double gnorm = sup_norm(g);
        report.grad_norm = gnorm;
        if (gnorm < options.grad_tol) {
            report.converged = true;
            report.status = "converged";
            break;
        }

        // Search direction.
        bool used_lbfgs = false;
        if (options.method == SolveOptions::Method::LBFGS && !memory.empty()) {
            dir = g;
            std::vector<double> alpha(memory.size());
            for (std::size_t r = memory.size(); r-- > 0;) {
                alpha[r] = rho[r] * dot_vec(memory[r].first, dir);
                for (std::size_t i = 0; i < dof; ++i)
                    dir[i] -= alpha[r] * memory[r].second[i];
            }
            const auto& last = memory.back();
            const double yy = dot_vec(last.second, last.second);
            const double sy = dot_vec(last.first, last.second);
            const double h0 = (yy > 0.0) ? sy / yy : 1.0;
            for (double& v : dir) v *= h0;
            for (std::size_t r = 0; r < memory.size(); ++r) {
                const double beta = rho[r] * dot_vec(memory[r].second, dir);
                for (std::size_t i = 0; i < dof; ++i)
                    dir[i] += (alpha[r] - beta) * memory[r].first[i];
            }
            for (double& v : dir) v = -v;
            used_lbfgs = true;
        } else {
            for (std::size_t i = 0; i < dof; ++i) dir[i] = -g[i];
        }

        double slope = dot_vec(g, dir);
        if (slope >= 0.0) {
            // Not a descent direction; drop the quasi-Newton memory.
            memory.clear();
            rho.clear();
            for (std::size_t i = 0; i < dof; ++i) dir[i] = -g[i];
            slope = dot_vec(g, dir);
            used_lbfgs = false;
        }

        double t = used_lbfgs ? 1.0 : gd_step;
        x_old = field.coeff;
        g_old = g;
        double f_new = 0.0;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            for (std::size_t i = 0; i < dof; ++i)
                field.coeff[i] = x_old[i] + t * dir[i];
            f_new = energy(field);
            if (f_new <= f + c1 * t * slope) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) {
            field.coeff = x_old;
            report.status = "line-search failure; landscape flagged nonconvex-stuck";
            break;
        }
        if (!used_lbfgs) gd_step = std::min(t * 2.0, 1.0e8);

        // Energy decrease below roundoff a few times in a row means the line
        // search can no longer see progress; stop instead of spinning.
        if (f - f_new <= 1e-15 * (std::abs(f) + 1e-300))
            ++stalled;
        else
            stalled = 0;

        gradient(field, g);
        if (options.method == SolveOptions::Method::LBFGS) {
            std::vector<double> s(dof), y(dof);
            for (std::size_t i = 0; i < dof; ++i) {
                s[i] = field.coeff[i] - x_old[i];
                y[i] = g[i] - g_old[i];
            }
            const double sy = dot_vec(s, y);
            if (sy > 1e-12 * std::sqrt(dot_vec(s, s) * dot_vec(y, y))) {
                memory.emplace_back(std::move(s), std::move(y));
                rho.push_back(1.0 / sy);
                if ((int)memory.size() > options.lbfgs_memory) {
                    memory.pop_front();
                    rho.pop_front();
                }
            }
        }
        f = f_new;
        if (energy_trace) energy_trace->push_back(f);
        if (stalled >= 8) {
            report.status = "stalled at machine precision";
            ++it;
            break;
        }
    }
    if (it == options.max_iterations) report.status = "iteration cap reached";
    report.iterations = it;
    report.total = f;
    report.grad_norm = sup_norm(g);
    if (!report.converged && report.grad_norm < options.grad_tol) {
        report.converged = true;
        report.status = "converged";
    }
    return report;
}

EnergyReport minimize_f0(TensorField& field, const ElasticParams& elastic,
                         const BulkParams& bulk, const HomEvaluator& hom,
                         const SolveOptions& options,
                         std::vector<double>* energy_trace) {
    auto efn = [&](const TensorField& f) {
        return volume_energy(f, elastic, bulk, &hom, nullptr).sum();
    };
    auto gfn = [&](const TensorField& f, std::vector<double>& grad) {
        volume_energy_grad(f, elastic, bulk, &hom, nullptr, grad);
    };
    EnergyReport r = minimize_field(field, efn, gfn, options, energy_trace);
    const EnergyReport parts = energy_f0(field, elastic, bulk, hom);
    r.elastic = parts.elastic;
    r.bulk = parts.bulk;
    r.homogenized = parts.homogenized;
    r.surface = 0.0;
    r.total = r.elastic + r.bulk + r.homogenized;
    return r;
}

void write_energy_trace_csv(const std::string& path, const std::vector<double>& trace) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_energy_trace_csv: cannot open " + path);
    out << "iteration,total_energy\n";
    out.precision(17);
    for (std::size_t i = 0; i < trace.size(); ++i) out << i << ',' << trace[i] << '\n';
}

} // namespace nemhom
