#include "nemhom/colloid.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "nemhom/quadrature.hpp"

namespace nemhom {

std::vector<std::string> ColloidConfig::warnings() const {
    std::vector<std::string> w;
    if (!(eps > 0.0)) throw std::invalid_argument("ColloidConfig: eps must be > 0");
    if (!(alpha > 1.0 && alpha < 1.5))
        w.push_back("assumption (H1) violated: 1 < alpha < 3/2 expected, got alpha=" +
                    std::to_string(alpha));
    if (gamma < 0.0)
        throw std::invalid_argument("ColloidConfig: gamma must be >= 0");
    if (gamma >= 0.25)
        w.push_back("assumption (K1) violated: 0 < gamma < 1/4 expected, got gamma=" +
                    std::to_string(gamma) + " (exploratory run, no asymptotic claim)");
    return w;
}

double ColloidConfig::scale() const { return std::pow(eps, alpha); }

namespace {

constexpr double kGolden = 0.6180339887498949;

double golden_fraction(long t) {
    const double v = (double(t) + 1.0) * kGolden;
    return v - std::floor(v);
}

} // namespace

InclusionLattice build_lattice(const ColloidConfig& config,
                               const std::vector<SpeciesSpec>& species,
                               const Vec3& box_lo, const Vec3& box_hi) {
    InclusionLattice lat;
    lat.eps = config.eps;
    lat.alpha = config.alpha;
    lat.scale = config.scale();
    lat.warnings = config.warnings();
    lat.count_per_species.assign(species.size(), 0);

    const double eps = config.eps;
    const double tol = 1e-12 * (1.0 + box_hi.cwiseAbs().maxCoeff());

    for (std::size_t s = 0; s < species.size(); ++s) {
        const double xi_max = species[s].density.max_value();
        if (xi_max > 1.0 + 1e-9)
            throw std::invalid_argument(
                "build_lattice: species density exceeds 1; a pitch-eps lattice with "
                "eps^3-normalized empirical measure cannot realize it (assumption (H3))");
        // Half-pitch offset pattern per extra species keeps the populations apart.
        Vec3 offset = Vec3::Zero();
        if (s > 0) {
            const unsigned bits = unsigned(s) & 7u;
            offset = 0.5 * eps *
                     Vec3(double(bits & 1u), double((bits >> 1) & 1u),
                          double((bits >> 2) & 1u));
            if (offset.isZero()) offset = 0.5 * eps * Vec3::Ones();
        }
        long kmin[3], kmax[3];
        bool fits = true;
        for (int d = 0; d < 3; ++d) {
            kmin[d] = long(std::ceil((box_lo[d] + 0.5 * eps - offset[d]) / eps - tol));
            kmax[d] = long(std::floor((box_hi[d] - 0.5 * eps - offset[d]) / eps + tol));
            if (kmin[d] > kmax[d]) fits = false;
        }
        if (!fits) {
            lat.warnings.push_back("build_lattice: eps=" + std::to_string(eps) +
                                   " too large, no cell fits for species " +
                                   std::to_string(s));
            continue;
        }
        long t = 0;
        for (long ki = kmin[0]; ki <= kmax[0]; ++ki)
            for (long kj = kmin[1]; kj <= kmax[1]; ++kj)
                for (long kk = kmin[2]; kk <= kmax[2]; ++kk, ++t) {
                    const Vec3 x(offset[0] + ki * eps, offset[1] + kj * eps,
                                 offset[2] + kk * eps);
                    const double xi = species[s].density.at(x);
                    if (xi < 0.0)
                        throw std::invalid_argument(
                            "build_lattice: negative species density (assumption (H3))");
                    if (golden_fraction(t) >= xi) continue; // thinning
                    Inclusion inc;
                    inc.center = x;
                    inc.species = int(s);
                    inc.rotation = species[s].rotation.at(x);
                    lat.inclusions.push_back(inc);
                    ++lat.count_per_species[s];
                }
        lat.total_surface_area +=
            double(lat.count_per_species[s]) * lat.scale * lat.scale * species[s].shape.area;
    }

    // Pairwise disjointness (conservative circumradius bound) and the
    // separation certificate.
    double min_sep = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < lat.inclusions.size(); ++i) {
        const Vec3& xi = lat.inclusions[i].center;
        double wall = std::numeric_limits<double>::infinity();
        for (int d = 0; d < 3; ++d)
            wall = std::min({wall, xi[d] - box_lo[d], box_hi[d] - xi[d]});
        double pair = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < lat.inclusions.size(); ++j) {
            if (j == i) continue;
            const double dist = (lat.inclusions[j].center - xi).norm();
            pair = std::min(pair, dist);
            if (j > i) {
                const double ri =
                    lat.scale * species[lat.inclusions[i].species].shape.circumradius;
                const double rj =
                    lat.scale * species[lat.inclusions[j].species].shape.circumradius;
                if (dist < ri + rj)
                    throw std::runtime_error(
                        "build_lattice: inclusions overlap (centre distance " +
                        std::to_string(dist) + " < radii sum " + std::to_string(ri + rj) +
                        "); reduce the shape scale or eps");
            }
        }
        if (std::isinf(pair)) pair = 2.0 * wall; // single inclusion
        min_sep = std::min(min_sep, (wall + 0.5 * pair) / lat.eps);
    }
    lat.separation = lat.inclusions.empty() ? 0.0 : min_sep;
    return lat;
}

std::vector<std::uint8_t> build_occupancy(const GridSpec& grid,
                                          const InclusionLattice& lattice,
                                          const std::vector<SpeciesSpec>& species) {
    std::vector<std::uint8_t> mask(grid.node_count(), 0);
    const double s = lattice.scale;
    for (const Inclusion& inc : lattice.inclusions) {
        const Shape& shape = species[inc.species].shape;
        if (!shape.contains)
            throw std::runtime_error("build_occupancy: shape '" + shape.name +
                                     "' has no point-membership test");
        const double r = s * shape.circumradius;
        int lo[3], hi[3];
        for (int d = 0; d < 3; ++d) {
            lo[d] = std::max(0, int(std::floor((inc.center[d] - r - grid.lo[d]) / grid.h[d])));
            hi[d] = std::min(grid.n[d] - 1,
                             int(std::ceil((inc.center[d] + r - grid.lo[d]) / grid.h[d])));
        }
        const Mat3 rt = inc.rotation.transpose();
        for (int i = lo[0]; i <= hi[0]; ++i)
            for (int j = lo[1]; j <= hi[1]; ++j)
                for (int k = lo[2]; k <= hi[2]; ++k) {
                    const Vec3 x = grid.position(i, j, k);
                    const Vec3 local = rt * (x - inc.center) / s;
                    if (shape.contains(local)) mask[grid.index(i, j, k)] = 1;
                }
    }
    return mask;
}

double occupied_fraction(const std::vector<std::uint8_t>& mask) {
    std::size_t c = 0;
    for (std::uint8_t v : mask) c += v;
    return mask.empty() ? 0.0 : double(c) / double(mask.size());
}

namespace {

// Mapped reference-shape quadrature rules for every inclusion, cached: world
// position, rotated outward normal, and the true surface measure weight
// (reference weight * jacobian * scale^2).
struct SurfacePoint {
    Vec3 position;
    Vec3 normal;
    double weight;
    int species;
};

std::vector<SurfacePoint> build_surface_points(const InclusionLattice& lattice,
                                               const std::vector<SpeciesSpec>& species,
                                               int order) {
    std::vector<SurfacePoint> pts;
    const double s = lattice.scale;
    for (const Inclusion& inc : lattice.inclusions) {
        const Shape& shape = species[inc.species].shape;
        for (const Patch& p : shape.patches) {
            const MappedRule ru = mapped_rule(order, p.u0, p.u1);
            const MappedRule rv = mapped_rule(order, p.v0, p.v1);
            for (int a = 0; a < order; ++a)
                for (int b = 0; b < order; ++b) {
                    const SurfaceSample smp = p.eval(ru.x[a], rv.x[b]);
                    SurfacePoint sp;
                    sp.position = inc.center + s * (inc.rotation * smp.position);
                    sp.normal = inc.rotation * smp.normal;
                    sp.weight = ru.w[a] * rv.w[b] * smp.jacobian * s * s;
                    sp.species = inc.species;
                    pts.push_back(sp);
                }
        }
    }
    return pts;
}

struct TrilinearStencil {
    std::size_t corner[8];
    double w[8];
};

TrilinearStencil trilinear(const GridSpec& g, const Vec3& x) {
    TrilinearStencil st;
    int base[3];
    double f[3];
    for (int d = 0; d < 3; ++d) {
        double t = (x[d] - g.lo[d]) / g.h[d];
        t = std::clamp(t, 0.0, double(g.n[d] - 1));
        base[d] = std::min(int(t), g.n[d] - 2);
        f[d] = t - base[d];
    }
    int idx = 0;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            for (int c = 0; c < 2; ++c, ++idx) {
                st.corner[idx] = g.index(base[0] + a, base[1] + b, base[2] + c);
                st.w[idx] = (a ? f[0] : 1.0 - f[0]) * (b ? f[1] : 1.0 - f[1]) *
                            (c ? f[2] : 1.0 - f[2]);
            }
    return st;
}

QTensor interpolate(const TensorField& f, const TrilinearStencil& st) {
    QTensor q;
    for (int i = 0; i < 8; ++i) {
        const double w = st.w[i];
        if (w == 0.0) continue;
        for (int m = 0; m < 5; ++m) q.c[m] += w * f.coeff[5 * st.corner[i] + m];
    }
    return q;
}

// Deterministic sum of per-inclusion partials: parallel over fixed blocks,
// serial combination.
double block_sum(const std::vector<double>& partial) {
    double s = 0.0;
    for (double v : partial) s += v;
    return s;
}

double surface_sum_grid(const TensorField& field,
                        const std::vector<SurfacePoint>& pts,
                        const std::vector<SpeciesSpec>& species) {
    const std::size_t n = pts.size();
    const std::size_t nblocks = 64;
    std::vector<double> partial(nblocks, 0.0);
#pragma omp parallel for schedule(static)
    for (std::size_t blk = 0; blk < nblocks; ++blk) {
        const std::size_t b0 = blk * n / nblocks, b1 = (blk + 1) * n / nblocks;
        double s = 0.0;
        for (std::size_t t = b0; t < b1; ++t) {
            const SurfacePoint& sp = pts[t];
            const QTensor q = interpolate(field, trilinear(field.grid, sp.position));
            s += sp.weight * f_surface(species[sp.species].surface, q, sp.normal);
        }
        partial[blk] = s;
    }
    return block_sum(partial);
}

double surface_sum_closed(const std::function<QTensor(const Vec3&)>& field,
                          const std::vector<SurfacePoint>& pts,
                          const std::vector<SpeciesSpec>& species) {
    const std::size_t n = pts.size();
    const std::size_t nblocks = 64;
    std::vector<double> partial(nblocks, 0.0);
#pragma omp parallel for schedule(static)
    for (std::size_t blk = 0; blk < nblocks; ++blk) {
        const std::size_t b0 = blk * n / nblocks, b1 = (blk + 1) * n / nblocks;
        double s = 0.0;
        for (std::size_t t = b0; t < b1; ++t) {
            const SurfacePoint& sp = pts[t];
            s += sp.weight * f_surface(species[sp.species].surface, field(sp.position),
                                       sp.normal);
        }
        partial[blk] = s;
    }
    return block_sum(partial);
}

// Frozen-centre variant: the field is evaluated once per inclusion.
template <typename CenterValue>
double surface_sum_frozen(const InclusionLattice& lattice,
                          const std::vector<SpeciesSpec>& species, int order,
                          CenterValue&& value_at_center) {
    double total = 0.0;
    const double s = lattice.scale;
    for (const Inclusion& inc : lattice.inclusions) {
        const QTensor q = value_at_center(inc.center);
        const Shape& shape = species[inc.species].shape;
        double local = 0.0;
        for (const Patch& p : shape.patches) {
            const MappedRule ru = mapped_rule(order, p.u0, p.u1);
            const MappedRule rv = mapped_rule(order, p.v0, p.v1);
            for (int a = 0; a < order; ++a)
                for (int b = 0; b < order; ++b) {
                    const SurfaceSample smp = p.eval(ru.x[a], rv.x[b]);
                    local += ru.w[a] * rv.w[b] * smp.jacobian *
                             f_surface(species[inc.species].surface, q,
                                       Vec3(inc.rotation * smp.normal));
                }
        }
        total += s * s * local;
    }
    return total;
}

double eps_power(const InclusionLattice& lattice, double extra_gamma = 0.0) {
    return std::pow(lattice.eps, 3.0 - 2.0 * lattice.alpha - extra_gamma);
}

} // namespace

double j_eps(const TensorField& field, const InclusionLattice& lattice,
             const std::vector<SpeciesSpec>& species, int order) {
    const auto pts = build_surface_points(lattice, species, order);
    return eps_power(lattice) * surface_sum_grid(field, pts, species);
}

double j_eps(const std::function<QTensor(const Vec3&)>& field,
             const InclusionLattice& lattice, const std::vector<SpeciesSpec>& species,
             int order) {
    const auto pts = build_surface_points(lattice, species, order);
    return eps_power(lattice) * surface_sum_closed(field, pts, species);
}

double j_tilde_eps(const TensorField& field, const InclusionLattice& lattice,
                   const std::vector<SpeciesSpec>& species, int order) {
    return eps_power(lattice) *
           surface_sum_frozen(lattice, species, order, [&](const Vec3& x) {
               return interpolate(field, trilinear(field.grid, x));
           });
}

double j_tilde_eps(const std::function<QTensor(const Vec3&)>& field,
                   const InclusionLattice& lattice,
                   const std::vector<SpeciesSpec>& species, int order) {
    return eps_power(lattice) * surface_sum_frozen(lattice, species, order, field);
}

double j0(const std::function<QTensor(const Vec3&)>& field, const HomEvaluator& hom,
          const Vec3& box_lo, const Vec3& box_hi, int volume_order) {
    const MappedRule rx = mapped_rule(volume_order, box_lo[0], box_hi[0]);
    const MappedRule ry = mapped_rule(volume_order, box_lo[1], box_hi[1]);
    const MappedRule rz = mapped_rule(volume_order, box_lo[2], box_hi[2]);
    std::vector<double> partial(volume_order, 0.0);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < volume_order; ++i) {
        double s = 0.0;
        for (int j = 0; j < volume_order; ++j)
            for (int k = 0; k < volume_order; ++k) {
                const Vec3 x(rx.x[i], ry.x[j], rz.x[k]);
                s += ry.w[j] * rz.w[k] * hom.value(field(x), x);
            }
        partial[i] = rx.w[i] * s;
    }
    return block_sum(partial);
}

namespace {

void check_strong_anchoring(const ColloidConfig& config,
                            const std::vector<SpeciesSpec>& species) {
    if (config.gamma <= 0.0) return;
    for (const SpeciesSpec& sp : species)
        if (!sp.surface.bounded_below())
            throw std::invalid_argument(
                "assumption (K2) violated: strong-anchoring mode (gamma > 0) requires "
                "surface densities bounded below (f_s >= 0)");
}

} // namespace

EnergyReport energy_f_eps(const TensorField& field, const InclusionLattice& lattice,
                          const std::vector<std::uint8_t>& occupied,
                          const ColloidConfig& config, const ElasticParams& elastic,
                          const BulkParams& bulk,
                          const std::vector<SpeciesSpec>& species) {
    check_strong_anchoring(config, species);
    const VolumeParts vol = volume_energy(field, elastic, bulk, nullptr,
                                          occupied.empty() ? nullptr : &occupied);
    EnergyReport r;
    r.elastic = vol.elastic;
    r.bulk = vol.bulk;
    if (!lattice.inclusions.empty()) {
        const auto pts = build_surface_points(lattice, species, config.surface_order);
        r.surface = eps_power(lattice, config.gamma) *
                    surface_sum_grid(field, pts, species);
    }
    r.total = r.elastic + r.bulk + r.homogenized + r.surface;
    return r;
}

EnergyReport minimize_f_eps(TensorField& field, const InclusionLattice& lattice,
                            const std::vector<std::uint8_t>& occupied,
                            const ColloidConfig& config, const ElasticParams& elastic,
                            const BulkParams& bulk,
                            const std::vector<SpeciesSpec>& species,
                            const SolveOptions& options,
                            std::vector<double>* energy_trace) {
    check_strong_anchoring(config, species);
    const std::vector<std::uint8_t>* mask = occupied.empty() ? nullptr : &occupied;
    const auto pts = build_surface_points(lattice, species, config.surface_order);
    const double pref = lattice.inclusions.empty() ? 0.0 : eps_power(lattice, config.gamma);

    auto efn = [&](const TensorField& f) {
        double e = volume_energy(f, elastic, bulk, nullptr, mask).sum();
        if (pref != 0.0) e += pref * surface_sum_grid(f, pts, species);
        return e;
    };
    auto gfn = [&](const TensorField& f, std::vector<double>& grad) {
        volume_energy_grad(f, elastic, bulk, nullptr, mask, grad);
        if (pref == 0.0) return;
        // Per-point density gradients in parallel, then one serial scatter.
        const std::size_t n = pts.size();
        std::vector<double> pgrad(5 * n, 0.0);
#pragma omp parallel for schedule(static)
        for (std::size_t t = 0; t < n; ++t) {
            const SurfacePoint& sp = pts[t];
            const QTensor q = interpolate(f, trilinear(f.grid, sp.position));
            const QTensor g =
                f_surface_grad(species[sp.species].surface, q, sp.normal);
            for (int m = 0; m < 5; ++m) pgrad[5 * t + m] = pref * sp.weight * g.c[m];
        }
        for (std::size_t t = 0; t < n; ++t) {
            const TrilinearStencil st = trilinear(f.grid, pts[t].position);
            for (int corner = 0; corner < 8; ++corner) {
                const double w = st.w[corner];
                if (w == 0.0) continue;
                for (int m = 0; m < 5; ++m)
                    grad[5 * st.corner[corner] + m] += w * pgrad[5 * t + m];
            }
        }
        // Dirichlet nodes stay fixed.
        const GridSpec& g = f.grid;
        for (int i = 0; i < g.n[0]; ++i)
            for (int j = 0; j < g.n[1]; ++j)
                for (int k = 0; k < g.n[2]; ++k)
                    if (g.on_boundary(i, j, k))
                        for (int m = 0; m < 5; ++m)
                            grad[5 * g.index(i, j, k) + m] = 0.0;
    };

    EnergyReport r = minimize_field(field, efn, gfn, options, energy_trace);
    const EnergyReport parts =
        energy_f_eps(field, lattice, occupied, config, elastic, bulk, species);
    r.elastic = parts.elastic;
    r.bulk = parts.bulk;
    r.surface = parts.surface;
    r.total = parts.total;
    return r;
}

void extend_into_inclusions(TensorField& field, const std::vector<std::uint8_t>& occupied,
                            double tol, int max_sweeps) {
    const GridSpec& g = field.grid;
    std::vector<std::size_t> nodes;
    for (int i = 0; i < g.n[0]; ++i)
        for (int j = 0; j < g.n[1]; ++j)
            for (int k = 0; k < g.n[2]; ++k)
                if (occupied[g.index(i, j, k)]) {
                    if (g.on_boundary(i, j, k))
                        throw std::runtime_error(
                            "extend_into_inclusions: occupied node on the container wall");
                    nodes.push_back(g.index(i, j, k));
                }
    if (nodes.empty()) return;

    const std::size_t sx = std::size_t(g.n[1]) * g.n[2], sy = g.n[2], sz = 1;
    const double ax = 1.0 / (g.h[0] * g.h[0]);
    const double ay = 1.0 / (g.h[1] * g.h[1]);
    const double az = 1.0 / (g.h[2] * g.h[2]);
    const double denom = 2.0 * (ax + ay + az);

    // Start from the mean of the surrounding unoccupied ring (keeps the
    // discrete maximum principle through the averaging iterations).
    for (int m = 0; m < 5; ++m) {
        double ring_sum = 0.0;
        long ring_count = 0;
        for (std::size_t c : nodes) {
            const std::size_t nb[6] = {c + sx, c - sx, c + sy, c - sy, c + sz, c - sz};
            for (std::size_t q : nb)
                if (!occupied[q]) {
                    ring_sum += field.coeff[5 * q + m];
                    ++ring_count;
                }
        }
        const double ring_mean = ring_count ? ring_sum / double(ring_count) : 0.0;
        for (std::size_t c : nodes) field.coeff[5 * c + m] = ring_mean;
    }

    std::vector<double> next(5 * nodes.size());
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double residual = 0.0;
#pragma omp parallel for schedule(static) reduction(max : residual)
        for (std::size_t t = 0; t < nodes.size(); ++t) {
            const std::size_t c = nodes[t];
            for (int m = 0; m < 5; ++m) {
                const double avg =
                    (ax * (field.coeff[5 * (c + sx) + m] + field.coeff[5 * (c - sx) + m]) +
                     ay * (field.coeff[5 * (c + sy) + m] + field.coeff[5 * (c - sy) + m]) +
                     az * (field.coeff[5 * (c + sz) + m] + field.coeff[5 * (c - sz) + m])) /
                    denom;
                next[5 * t + m] = avg;
                residual = std::max(residual, std::abs(avg - field.coeff[5 * c + m]));
            }
        }
        for (std::size_t t = 0; t < nodes.size(); ++t)
            for (int m = 0; m < 5; ++m) field.coeff[5 * nodes[t] + m] = next[5 * t + m];
        if (residual < tol) return;
    }
    throw std::runtime_error("extend_into_inclusions: Jacobi did not reach tolerance");
}

TensorField mollify_recovery(const TensorField& field, double sigma) {
    const GridSpec& g = field.grid;
    const double hmax = std::max({g.h[0], g.h[1], g.h[2]});
    if (!(sigma > 0.0) || sigma >= 1.0)
        throw std::invalid_argument("mollify_recovery: sigma must be in (0, 1)");
    if (sigma < 2.0 * hmax - 1e-12)
        throw std::invalid_argument(
            "mollify_recovery: sigma below grid resolution (need sigma >= 2h)");

    auto bump = [](double t) {
        const double t2 = t * t;
        return t2 < 1.0 ? std::exp(-1.0 / (1.0 - t2)) : 0.0;
    };

    TensorField out = field;
    const std::size_t n = g.node_count();

    // P = Q - g.
    std::vector<double> work(5 * n);
    for (int i = 0; i < g.n[0]; ++i)
        for (int j = 0; j < g.n[1]; ++j)
            for (int k = 0; k < g.n[2]; ++k) {
                const std::size_t c = g.index(i, j, k);
                const QTensor gb = field.boundary.at(g.position(i, j, k));
                for (int m = 0; m < 5; ++m)
                    work[5 * c + m] = field.coeff[5 * c + m] - gb.c[m];
            }

    // Separable convolution, zero extension past the container.
    std::vector<double> tmp(5 * n);
    const std::size_t stride[3] = {std::size_t(g.n[1]) * g.n[2], std::size_t(g.n[2]), 1};
    for (int axis = 0; axis < 3; ++axis) {
        const int radius = int(std::floor(sigma / g.h[axis]));
        std::vector<double> w(2 * radius + 1);
        double sum = 0.0;
        for (int o = -radius; o <= radius; ++o) {
            w[o + radius] = bump(o * g.h[axis] / sigma);
            sum += w[o + radius];
        }
        for (double& v : w) v /= sum;

        std::fill(tmp.begin(), tmp.end(), 0.0);
#pragma omp parallel for schedule(static)
        for (int i = 0; i < g.n[0]; ++i)
            for (int j = 0; j < g.n[1]; ++j)
                for (int k = 0; k < g.n[2]; ++k) {
                    const int idx[3] = {i, j, k};
                    const std::size_t c = g.index(i, j, k);
                    for (int o = -radius; o <= radius; ++o) {
                        const int t = idx[axis] + o;
                        if (t < 0 || t >= g.n[axis]) continue;
                        const std::size_t cs = c + std::size_t(t - idx[axis]) * stride[axis];
                        const double wo = w[o + radius];
                        for (int m = 0; m < 5; ++m)
                            tmp[5 * c + m] += wo * work[5 * cs + m];
                    }
                }
        work.swap(tmp);
    }

    // Cutoff and boundary data restoration.
    for (int i = 0; i < g.n[0]; ++i)
        for (int j = 0; j < g.n[1]; ++j)
            for (int k = 0; k < g.n[2]; ++k) {
                const std::size_t c = g.index(i, j, k);
                const Vec3 x = g.position(i, j, k);
                double dist = std::numeric_limits<double>::infinity();
                for (int d = 0; d < 3; ++d)
                    dist = std::min({dist, x[d] - g.lo[d], g.hi[d] - x[d]});
                const double cut = std::min(1.0, std::max(0.0, dist) / sigma);
                const QTensor gb = field.boundary.at(x);
                for (int m = 0; m < 5; ++m)
                    out.coeff[5 * c + m] = cut * work[5 * c + m] + gb.c[m];
            }
    out.apply_boundary();
    return out;
}

double flat_norm_estimate(const InclusionLattice& lattice,
                          const std::vector<SpeciesSpec>& species, const Vec3& box_lo,
                          const Vec3& box_hi, int test_count, std::uint64_t seed) {
    if (test_count < 1)
        throw std::invalid_argument("flat_norm_estimate: test_count must be >= 1");

    struct Mode {
        Vec3 k;
        double c, phase;
    };
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const Vec3 len = box_hi - box_lo;

    const int volume_order = 32;
    const MappedRule rx = mapped_rule(volume_order, box_lo[0], box_hi[0]);
    const MappedRule ry = mapped_rule(volume_order, box_lo[1], box_hi[1]);
    const MappedRule rz = mapped_rule(volume_order, box_lo[2], box_hi[2]);

    double best = 0.0;
    for (int t = 0; t < test_count; ++t) {
        std::vector<Mode> modes;
        double bound = 0.0;
        if (t == 0) {
            modes.push_back({Vec3::Zero(), 1.0, 0.0}); // constant test function
            bound = 1.0;
        } else {
            const int n_modes = 6;
            for (int r = 0; r < n_modes; ++r) {
                Mode m;
                int mi[3];
                do {
                    for (int d = 0; d < 3; ++d) mi[d] = int(unif(rng) * 3.0);
                } while (mi[0] == 0 && mi[1] == 0 && mi[2] == 0);
                for (int d = 0; d < 3; ++d) m.k[d] = M_PI * mi[d] / len[d];
                m.c = 2.0 * unif(rng) - 1.0;
                m.phase = 2.0 * M_PI * unif(rng);
                modes.push_back(m);
                bound += std::abs(m.c) * (1.0 + m.k.norm());
            }
        }
        auto phi = [&](const Vec3& x) {
            double v = 0.0;
            for (const Mode& m : modes) v += m.c * std::cos(m.k.dot(x - box_lo) + m.phase);
            return v / bound;
        };

        for (std::size_t s = 0; s < species.size(); ++s) {
            double mu = 0.0;
            for (const Inclusion& inc : lattice.inclusions)
                if (inc.species == int(s)) mu += phi(inc.center);
            mu *= lattice.eps * lattice.eps * lattice.eps;

            double xi_int = 0.0;
            for (int i = 0; i < volume_order; ++i)
                for (int j = 0; j < volume_order; ++j)
                    for (int k = 0; k < volume_order; ++k) {
                        const Vec3 x(rx.x[i], ry.x[j], rz.x[k]);
                        xi_int += rx.w[i] * ry.w[j] * rz.w[k] *
                                  species[s].density.at(x) * phi(x);
                    }
            best = std::max(best, std::abs(mu - xi_int));
        }
    }
    return best;
}

std::vector<SweepRow> sweep(const SweepOptions& options, const Vec3& box_lo,
                            const Vec3& box_hi, const ElasticParams& elastic,
                            const BulkParams& bulk,
                            const std::vector<SpeciesSpec>& species,
                            const BoundaryData& boundary, EnergyReport* f0_report,
                            TensorField* f0_minimiser, std::vector<std::string>* log) {
    if (options.eps_list.empty())
        throw std::invalid_argument("sweep: eps list is empty");
    for (std::size_t i = 1; i < options.eps_list.size(); ++i)
        if (options.eps_list[i] >= options.eps_list[i - 1])
            throw std::invalid_argument("sweep: eps list must be decreasing");

    auto note = [&](const std::string& s) {
        if (log) log->push_back(s);
    };

    // Common grid sized by the smallest eps (then h <= eps^alpha/4 holds for
    // every entry of the sweep).
    const double eps_min = options.eps_list.back();
    int n[3];
    for (int d = 0; d < 3; ++d) {
        if (options.grid_n_override > 0) {
            n[d] = options.grid_n_override;
        } else {
            const double h_target = std::pow(eps_min, options.alpha) / 4.0;
            n[d] = std::max(4, 1 + int(std::ceil((box_hi[d] - box_lo[d]) / h_target)));
            if (n[d] > options.max_grid_n) {
                note("sweep: grid capped at " + std::to_string(options.max_grid_n) +
                     " nodes per axis (resolution rule asked for " + std::to_string(n[d]) +
                     ")");
                n[d] = options.max_grid_n;
            }
        }
    }
    const GridSpec grid(box_lo, box_hi, n[0], n[1], n[2]);
    note("sweep: grid " + std::to_string(n[0]) + "^3, h=" + std::to_string(grid.h[0]));

    // Reference solve of the homogenised functional.
    HomEvaluator hom(species, options.surface_order);
    TensorField q0(grid, boundary);
    q0.fill_harmonic();
    std::vector<double> trace;
    EnergyReport rep0 = minimize_f0(q0, elastic, bulk, hom, options.solver, &trace);
    note("sweep: F0 solve iters=" + std::to_string(rep0.iterations) +
         " grad=" + std::to_string(rep0.grad_norm) + " status=" + rep0.status);
    if (f0_report) *f0_report = rep0;
    if (f0_minimiser) *f0_minimiser = q0;

    std::vector<SweepRow> rows;
    for (double eps : options.eps_list) {
        const auto t_start = std::chrono::steady_clock::now();
        SweepRow row;
        row.eps = eps;
        row.gamma = options.gamma;
        row.f0 = rep0.total;

        ColloidConfig cfg;
        cfg.alpha = options.alpha;
        cfg.eps = eps;
        cfg.gamma = options.gamma;
        cfg.surface_order = options.surface_order;

        InclusionLattice lattice = build_lattice(cfg, species, box_lo, box_hi);
        for (const std::string& w : lattice.warnings) note("sweep eps=" + std::to_string(eps) + ": " + w);
        row.n_inclusions = long(lattice.inclusions.size());
        row.separation = lattice.separation;

        std::vector<std::uint8_t> mask;
        if (!lattice.inclusions.empty())
            mask = build_occupancy(grid, lattice, species);
        row.occupied_frac = occupied_fraction(mask);

        TensorField qe = q0; // warm start from the F0 minimiser
        std::vector<double> tr;
        EnergyReport rep = minimize_f_eps(qe, lattice, mask, cfg, elastic, bulk, species,
                                          options.solver, &tr);
        note("sweep eps=" + std::to_string(eps) +
             ": F_eps iters=" + std::to_string(rep.iterations) +
             " grad=" + std::to_string(rep.grad_norm) + " status=" + rep.status);
        row.iterations = rep.iterations;
        row.solver_ok = rep.converged || rep.status == "iteration cap reached";
        row.f_eps = rep.total;
        row.delta_f = std::abs(rep.total - rep0.total);
        row.surface_scaled = std::pow(eps, options.gamma) * rep.surface;
        if (!lattice.inclusions.empty())
            row.j_eps_value = j_eps(qe, lattice, species, options.surface_order);

        // Extend and compare against the homogenised minimiser.
        if (!mask.empty()) extend_into_inclusions(qe, mask);
        row.l2_error = field_l2_distance(qe, q0);
        row.h1_error = field_h1_distance(qe, q0);

        // Constraint residual of the strong-anchoring limit.
        if (!hom.empty()) {
            double int_fhom = 0.0, int_min = 0.0;
            for (int i = 0; i < grid.n[0]; ++i)
                for (int j = 0; j < grid.n[1]; ++j)
                    for (int k = 0; k < grid.n[2]; ++k) {
                        const double w = grid.weight(i, j, k);
                        const Vec3 x = grid.position(i, j, k);
                        int_fhom += w * hom.value(qe.at(grid.index(i, j, k)), x);
                        int_min += w * hom.min_value(x);
                    }
            row.int_f_hom = int_fhom;
            row.constraint_residual = int_fhom - int_min;
        }

        if (!lattice.inclusions.empty())
            row.flat_norm = flat_norm_estimate(lattice, species, box_lo, box_hi,
                                               options.flat_norm_tests, options.seed);

        row.wall_time =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
                .count();
        rows.push_back(row);
    }
    return rows;
}

void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_sweep_csv: cannot open " + path);
    out << "eps,gamma,n_inclusions,f_eps,f0,delta_f,l2_error,h1_error,j_eps,"
           "surface_scaled,int_f_hom,constraint_residual,flat_norm,occupied_frac,"
           "separation,iterations,solver_ok,wall_time\n";
    out.precision(17);
    for (const SweepRow& r : rows) {
        out << r.eps << ',' << r.gamma << ',' << r.n_inclusions << ',' << r.f_eps << ','
            << r.f0 << ',' << r.delta_f << ',' << r.l2_error << ',' << r.h1_error << ','
            << r.j_eps_value << ',' << r.surface_scaled << ',' << r.int_f_hom << ','
            << r.constraint_residual << ',' << r.flat_norm << ',' << r.occupied_frac
            << ',' << r.separation << ',' << r.iterations << ',' << (r.solver_ok ? 1 : 0)
            << ',' << r.wall_time << '\n';
    }
}

} // namespace nemhom
