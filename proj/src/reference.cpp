#include "nemhom/reference.hpp"

#include <cmath>

namespace nemhom::ref {

double f_elastic_full(const GradientSlot& d, const ElasticParams& p) {
    double g[3][3][3];
    for (int k = 0; k < 3; ++k) {
        const Mat3 m = d.d[k].matrix();
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) g[i][j][k] = m(i, j);
    }
    double sum = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) {
                sum += p.L1 * g[i][j][k] * g[i][j][k];
                sum += p.L3 * g[i][k][j] * g[i][j][k];
            }
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) sum += p.L2 * g[i][j][j] * g[i][k][k];
    return sum;
}

namespace {

bool avail(const GridSpec& g, const std::vector<std::uint8_t>* occ, int i, int j,
           int k) {
    if (i < 0 || j < 0 || k < 0 || i >= g.n[0] || j >= g.n[1] || k >= g.n[2])
        return false;
    return !occ || !(*occ)[g.index(i, j, k)];
}

// Value of coefficient m at (i,j,k) shifted along axis.
double coeff_at(const TensorField& f, int i, int j, int k, int m) {
    return f.coeff[5 * f.grid.index(i, j, k) + m];
}

GradientSlot grad_slot(const TensorField& f, const std::vector<std::uint8_t>* occ,
                       int i, int j, int k) {
    GradientSlot d;
    const int idx[3] = {i, j, k};
    for (int axis = 0; axis < 3; ++axis) {
        int lo[3] = {i, j, k}, hi[3] = {i, j, k};
        --lo[axis];
        ++hi[axis];
        const bool has_m = avail(f.grid, occ, lo[0], lo[1], lo[2]);
        const bool has_p = avail(f.grid, occ, hi[0], hi[1], hi[2]);
        const double h = f.grid.h[axis];
        for (int m = 0; m < 5; ++m) {
            double v = 0.0;
            if (has_m && has_p)
                v = (coeff_at(f, hi[0], hi[1], hi[2], m) -
                     coeff_at(f, lo[0], lo[1], lo[2], m)) /
                    (2.0 * h);
            else if (has_p)
                v = (coeff_at(f, hi[0], hi[1], hi[2], m) - coeff_at(f, i, j, k, m)) / h;
            else if (has_m)
                v = (coeff_at(f, i, j, k, m) - coeff_at(f, lo[0], lo[1], lo[2], m)) / h;
            d.d[axis].c[m] = v;
        }
        (void)idx;
    }
    return d;
}

} // namespace

VolumeParts volume_energy(const TensorField& field, const ElasticParams& elastic,
                          const BulkParams& bulk, const HomEvaluator* hom,
                          const std::vector<std::uint8_t>* occupied) {
    VolumeParts parts;
    const GridSpec& g = field.grid;
    for (int i = 0; i < g.n[0]; ++i)
        for (int j = 0; j < g.n[1]; ++j)
            for (int k = 0; k < g.n[2]; ++k) {
                const std::size_t c = g.index(i, j, k);
                if (occupied && (*occupied)[c]) continue;
                const double w = g.weight(i, j, k);
                const GradientSlot d = grad_slot(field, occupied, i, j, k);
                parts.elastic += w * f_elastic_full(d, elastic);
                parts.bulk += w * f_bulk(field.at(c), bulk);
                if (hom && !hom->empty())
                    parts.homogenized += w * hom->value(field.at(c), g.position(i, j, k));
            }
    return parts;
}

void volume_energy_grad(const TensorField& field, const ElasticParams& elastic,
                        const BulkParams& bulk, const HomEvaluator* hom,
                        const std::vector<std::uint8_t>* occupied,
                        std::vector<double>& grad) {
    const GridSpec& g = field.grid;
    grad.assign(field.coeff.size(), 0.0);
    for (int i = 0; i < g.n[0]; ++i)
        for (int j = 0; j < g.n[1]; ++j)
            for (int k = 0; k < g.n[2]; ++k) {
                const std::size_t c = g.index(i, j, k);
                if (occupied && (*occupied)[c]) continue;
                const double w = g.weight(i, j, k);
                const GradientSlot d = grad_slot(field, occupied, i, j, k);
                const GradientSlot eg = f_elastic_grad(d, elastic);
                // Scatter the chain rule of each axis stencil.
                for (int axis = 0; axis < 3; ++axis) {
                    int lo[3] = {i, j, k}, hi[3] = {i, j, k};
                    --lo[axis];
                    ++hi[axis];
                    const bool has_m = avail(g, occupied, lo[0], lo[1], lo[2]);
                    const bool has_p = avail(g, occupied, hi[0], hi[1], hi[2]);
                    const double h = g.h[axis];
                    if (has_m && has_p) {
                        const std::size_t cp = g.index(hi[0], hi[1], hi[2]);
                        const std::size_t cm = g.index(lo[0], lo[1], lo[2]);
                        for (int m = 0; m < 5; ++m) {
                            grad[5 * cp + m] += w * eg.d[axis].c[m] / (2.0 * h);
                            grad[5 * cm + m] -= w * eg.d[axis].c[m] / (2.0 * h);
                        }
                    } else if (has_p) {
                        const std::size_t cp = g.index(hi[0], hi[1], hi[2]);
                        for (int m = 0; m < 5; ++m) {
                            grad[5 * cp + m] += w * eg.d[axis].c[m] / h;
                            grad[5 * c + m] -= w * eg.d[axis].c[m] / h;
                        }
                    } else if (has_m) {
                        const std::size_t cm = g.index(lo[0], lo[1], lo[2]);
                        for (int m = 0; m < 5; ++m) {
                            grad[5 * c + m] += w * eg.d[axis].c[m] / h;
                            grad[5 * cm + m] -= w * eg.d[axis].c[m] / h;
                        }
                    }
                }
                QTensor local = f_bulk_grad(field.at(c), bulk);
                if (hom && !hom->empty())
                    local += hom->grad(field.at(c), g.position(i, j, k));
                for (int m = 0; m < 5; ++m) grad[5 * c + m] += w * local.c[m];
            }
    // Fixed nodes.
    for (int i = 0; i < g.n[0]; ++i)
        for (int j = 0; j < g.n[1]; ++j)
            for (int k = 0; k < g.n[2]; ++k)
                if (g.on_boundary(i, j, k) ||
                    (occupied && (*occupied)[g.index(i, j, k)])) {
                    const std::size_t c = g.index(i, j, k);
                    for (int m = 0; m < 5; ++m) grad[5 * c + m] = 0.0;
                }
}

void convolve_direct(const GridSpec& grid, const std::vector<double>& in,
                     std::vector<double>& out, double sigma) {
    auto bump = [](double t) {
        const double t2 = t * t;
        return t2 < 1.0 ? std::exp(-1.0 / (1.0 - t2)) : 0.0;
    };
    int radius[3];
    std::vector<std::vector<double>> w1(3);
    for (int d = 0; d < 3; ++d) {
        radius[d] = int(std::floor(sigma / grid.h[d]));
        double sum = 0.0;
        for (int o = -radius[d]; o <= radius[d]; ++o) {
            const double v = bump(o * grid.h[d] / sigma);
            w1[d].push_back(v);
            sum += v;
        }
        for (double& v : w1[d]) v /= sum;
    }
    out.assign(in.size(), 0.0);
    const int nc = int(in.size() / grid.node_count());
    for (int i = 0; i < grid.n[0]; ++i)
        for (int j = 0; j < grid.n[1]; ++j)
            for (int k = 0; k < grid.n[2]; ++k)
                for (int m = 0; m < nc; ++m) {
                    double s = 0.0;
                    for (int oi = -radius[0]; oi <= radius[0]; ++oi)
                        for (int oj = -radius[1]; oj <= radius[1]; ++oj)
                            for (int ok = -radius[2]; ok <= radius[2]; ++ok) {
                                const int ii = i + oi, jj = j + oj, kk = k + ok;
                                if (ii < 0 || jj < 0 || kk < 0 || ii >= grid.n[0] ||
                                    jj >= grid.n[1] || kk >= grid.n[2])
                                    continue; // zero extension
                                s += w1[0][oi + radius[0]] * w1[1][oj + radius[1]] *
                                     w1[2][ok + radius[2]] *
                                     in[nc * grid.index(ii, jj, kk) + m];
                            }
                    out[nc * grid.index(i, j, k) + m] = s;
                }
}

} // namespace nemhom::ref
