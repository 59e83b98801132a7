#include "nemhom/grid.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace nemhom {

GridSpec::GridSpec(const Vec3& lo_, const Vec3& hi_, int nx, int ny, int nz)
    : lo(lo_), hi(hi_) {
    n[0] = nx;
    n[1] = ny;
    n[2] = nz;
    for (int d = 0; d < 3; ++d) {
        if (n[d] < 4) throw std::invalid_argument("GridSpec: resolution >= 4 per axis");
        if (!(hi[d] > lo[d])) throw std::invalid_argument("GridSpec: empty box");
        h[d] = (hi[d] - lo[d]) / (n[d] - 1);
    }
}

BoundaryData BoundaryData::constant(const QTensor& q) {
    BoundaryData b;
    b.kind = Kind::Constant;
    b.q0 = q;
    b.lipschitz = 0.0;
    return b;
}

BoundaryData BoundaryData::uniaxial(double s, const Vec3& director,
                                    const Vec3& wave_vector) {
    BoundaryData b;
    b.kind = Kind::Uniaxial;
    b.s = s;
    b.director = director.normalized();
    b.wave_vector = wave_vector;
    b.lipschitz = std::abs(s) * 2.0 * wave_vector.norm();
    return b;
}

BoundaryData BoundaryData::from_function(std::function<QTensor(const Vec3&)> f,
                                         double lipschitz) {
    BoundaryData b;
    b.kind = Kind::Callable;
    b.callable = std::move(f);
    b.lipschitz = lipschitz;
    return b;
}

QTensor BoundaryData::at(const Vec3& x) const {
    switch (kind) {
    case Kind::Constant:
        return q0;
    case Kind::Uniaxial: {
        Vec3 n = director;
        if (wave_vector.squaredNorm() > 0.0) {
            // Rotate the director in the plane orthogonal-ish to z by the
            // phase wave_vector . x; keeps the map Lipschitz.
            const double phase = wave_vector.dot(x);
            const double c = std::cos(phase), sn = std::sin(phase);
            n = Vec3(c * director[0] - sn * director[1],
                     sn * director[0] + c * director[1], director[2]);
            n.normalize();
        }
        Mat3 m = s * (n * n.transpose() - Mat3::Identity() / 3.0);
        return QTensor::from_matrix(m);
    }
    case Kind::Callable:
        return callable(x);
    }
    return QTensor{};
}

TensorField::TensorField(const GridSpec& g, const BoundaryData& b)
    : grid(g), coeff(5 * g.node_count(), 0.0), boundary(b) {
    apply_boundary();
}

void TensorField::apply_boundary() {
    for (int i = 0; i < grid.n[0]; ++i)
        for (int j = 0; j < grid.n[1]; ++j)
            for (int k = 0; k < grid.n[2]; ++k)
                if (grid.on_boundary(i, j, k))
                    set(grid.index(i, j, k), boundary.at(grid.position(i, j, k)));
}

void TensorField::fill_constant(const QTensor& q) {
    for (int i = 0; i < grid.n[0]; ++i)
        for (int j = 0; j < grid.n[1]; ++j)
            for (int k = 0; k < grid.n[2]; ++k)
                if (!grid.on_boundary(i, j, k)) set(grid.index(i, j, k), q);
    apply_boundary();
}

void TensorField::fill_function(const std::function<QTensor(const Vec3&)>& f) {
    for (int i = 0; i < grid.n[0]; ++i)
        for (int j = 0; j < grid.n[1]; ++j)
            for (int k = 0; k < grid.n[2]; ++k)
                set(grid.index(i, j, k), f(grid.position(i, j, k)));
    apply_boundary();
}

void TensorField::fill_harmonic(double tol, int max_iters) {
    apply_boundary();
    const int nx = grid.n[0], ny = grid.n[1], nz = grid.n[2];
    const double ax = 1.0 / (grid.h[0] * grid.h[0]);
    const double ay = 1.0 / (grid.h[1] * grid.h[1]);
    const double az = 1.0 / (grid.h[2] * grid.h[2]);
    const double diag = 2.0 * (ax + ay + az);

    // Interior unknown list.
    std::vector<std::size_t> interior;
    interior.reserve(grid.node_count());
    for (int i = 1; i < nx - 1; ++i)
        for (int j = 1; j < ny - 1; ++j)
            for (int k = 1; k < nz - 1; ++k) interior.push_back(grid.index(i, j, k));
    if (interior.empty()) return;

    const std::size_t m = interior.size();
    const std::size_t sx = std::size_t(ny) * nz, sy = nz, sz = 1;

    for (int comp = 0; comp < 5; ++comp) {
        auto val = [&](std::size_t node) { return coeff[5 * node + comp]; };
        // A u = b with A the 7-point Laplacian on interior nodes and b the
        // boundary contributions.
        std::vector<double> u(m), b(m, 0.0), r(m), p(m), ap(m);
        auto apply = [&](const std::vector<double>& vin, std::vector<double>& vout) {
            // Map from node to interior slot is implicit: recompute via a
            // scratch full-grid vector for clarity and determinism.
            static thread_local std::vector<double> full;
            full.assign(grid.node_count(), 0.0);
            for (std::size_t t = 0; t < m; ++t) full[interior[t]] = vin[t];
            for (std::size_t t = 0; t < m; ++t) {
                const std::size_t c = interior[t];
                vout[t] = diag * full[c] - ax * (full[c + sx] + full[c - sx]) -
                          ay * (full[c + sy] + full[c - sy]) -
                          az * (full[c + sz] + full[c - sz]);
            }
        };
        // b gathers Dirichlet neighbours.
        {
            std::vector<double> full(grid.node_count(), 0.0);
            for (int i = 0; i < nx; ++i)
                for (int j = 0; j < ny; ++j)
                    for (int k = 0; k < nz; ++k)
                        if (grid.on_boundary(i, j, k))
                            full[grid.index(i, j, k)] = val(grid.index(i, j, k));
            for (std::size_t t = 0; t < m; ++t) {
                const std::size_t c = interior[t];
                b[t] = ax * (full[c + sx] + full[c - sx]) +
                       ay * (full[c + sy] + full[c - sy]) +
                       az * (full[c + sz] + full[c - sz]);
            }
        }
        for (std::size_t t = 0; t < m; ++t) u[t] = val(interior[t]);
        apply(u, ap);
        double rr = 0.0, bb = 0.0;
        for (std::size_t t = 0; t < m; ++t) {
            r[t] = b[t] - ap[t];
            p[t] = r[t];
            rr += r[t] * r[t];
            bb += b[t] * b[t];
        }
        const double scale = 1.0 + std::sqrt(bb);
        for (int it = 0; it < max_iters && std::sqrt(rr) > tol * scale; ++it) {
            apply(p, ap);
            double pap = 0.0;
            for (std::size_t t = 0; t < m; ++t) pap += p[t] * ap[t];
            if (pap <= 0.0) break;
            const double alpha = rr / pap;
            double rr_new = 0.0;
            for (std::size_t t = 0; t < m; ++t) {
                u[t] += alpha * p[t];
                r[t] -= alpha * ap[t];
                rr_new += r[t] * r[t];
            }
            const double beta = rr_new / rr;
            rr = rr_new;
            for (std::size_t t = 0; t < m; ++t) p[t] = r[t] + beta * p[t];
        }
        for (std::size_t t = 0; t < m; ++t) coeff[5 * interior[t] + comp] = u[t];
    }
}

double field_l2_norm(const TensorField& f) {
    double s = 0.0;
    for (int i = 0; i < f.grid.n[0]; ++i)
        for (int j = 0; j < f.grid.n[1]; ++j)
            for (int k = 0; k < f.grid.n[2]; ++k)
                s += f.grid.weight(i, j, k) * f.at(f.grid.index(i, j, k)).norm2();
    return std::sqrt(s);
}

double field_l2_distance(const TensorField& a, const TensorField& b) {
    double s = 0.0;
    for (int i = 0; i < a.grid.n[0]; ++i)
        for (int j = 0; j < a.grid.n[1]; ++j)
            for (int k = 0; k < a.grid.n[2]; ++k) {
                const std::size_t c = a.grid.index(i, j, k);
                const QTensor d = a.at(c) - b.at(c);
                s += a.grid.weight(i, j, k) * d.norm2();
            }
    return std::sqrt(s);
}

namespace {

// d/dx_axis of coefficient comp at (i,j,k), central inside, one-sided at the
// grid faces.
double diff_component(const TensorField& f, int i, int j, int k, int axis, int comp) {
    int idx[3] = {i, j, k};
    const int n = f.grid.n[axis];
    const double h = f.grid.h[axis];
    auto value = [&](int t) {
        int p[3] = {idx[0], idx[1], idx[2]};
        p[axis] = t;
        return f.coeff[5 * f.grid.index(p[0], p[1], p[2]) + comp];
    };
    const int t = idx[axis];
    if (t > 0 && t < n - 1) return (value(t + 1) - value(t - 1)) / (2.0 * h);
    if (t == 0) return (value(1) - value(0)) / h;
    return (value(n - 1) - value(n - 2)) / h;
}

} // namespace

double field_h1_distance(const TensorField& a, const TensorField& b) {
    double s = 0.0;
    for (int i = 0; i < a.grid.n[0]; ++i)
        for (int j = 0; j < a.grid.n[1]; ++j)
            for (int k = 0; k < a.grid.n[2]; ++k) {
                const std::size_t c = a.grid.index(i, j, k);
                const QTensor d = a.at(c) - b.at(c);
                double g2 = 0.0;
                for (int axis = 0; axis < 3; ++axis)
                    for (int comp = 0; comp < 5; ++comp) {
                        const double da = diff_component(a, i, j, k, axis, comp);
                        const double db = diff_component(b, i, j, k, axis, comp);
                        g2 += (da - db) * (da - db);
                    }
                s += a.grid.weight(i, j, k) * (d.norm2() + g2);
            }
    return std::sqrt(s);
}

double field_sup_distance(const TensorField& a, const TensorField& b) {
    double sup = 0.0;
    const std::size_t n = a.grid.node_count();
    for (std::size_t c = 0; c < n; ++c) sup = std::max(sup, (a.at(c) - b.at(c)).norm());
    return sup;
}

namespace {
constexpr char kMagic[4] = {'N', 'M', 'Q', 'F'};
constexpr std::uint32_t kVersion = 1;
const char kBasisNote[] =
    "S0 basis: E0=diag(-1,-1,2)/sqrt6 E1=diag(1,-1,0)/sqrt2 "
    "E2=(e1e2+e2e1)/sqrt2 E3=(e1e3+e3e1)/sqrt2 E4=(e2e3+e3e2)/sqrt2";
} // namespace

void save_field(const std::string& path, const TensorField& f) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_field: cannot open " + path);
    out.write(kMagic, 4);
    std::uint32_t v = kVersion;
    out.write(reinterpret_cast<const char*>(&v), 4);
    std::uint32_t dims[3] = {std::uint32_t(f.grid.n[0]), std::uint32_t(f.grid.n[1]),
                             std::uint32_t(f.grid.n[2])};
    out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
    double geo[6] = {f.grid.lo[0], f.grid.lo[1], f.grid.lo[2],
                     f.grid.h[0], f.grid.h[1], f.grid.h[2]};
    out.write(reinterpret_cast<const char*>(geo), sizeof(geo));
    char note[128] = {};
    std::strncpy(note, kBasisNote, sizeof(note) - 1);
    out.write(note, sizeof(note));
    out.write(reinterpret_cast<const char*>(f.coeff.data()),
              std::streamsize(f.coeff.size() * sizeof(double)));
    if (!out) throw std::runtime_error("save_field: write failed for " + path);
}

TensorField load_field(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_field: cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("load_field: bad magic in " + path);
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    if (v != kVersion) throw std::runtime_error("load_field: unsupported version");
    std::uint32_t dims[3];
    in.read(reinterpret_cast<char*>(dims), sizeof(dims));
    double geo[6];
    in.read(reinterpret_cast<char*>(geo), sizeof(geo));
    char note[128];
    in.read(note, sizeof(note));
    const Vec3 lo(geo[0], geo[1], geo[2]);
    const Vec3 hi(geo[0] + geo[3] * (dims[0] - 1), geo[1] + geo[4] * (dims[1] - 1),
                  geo[2] + geo[5] * (dims[2] - 1));
    TensorField f(GridSpec(lo, hi, int(dims[0]), int(dims[1]), int(dims[2])),
                  BoundaryData::constant(QTensor{}));
    in.read(reinterpret_cast<char*>(f.coeff.data()),
            std::streamsize(f.coeff.size() * sizeof(double)));
    if (!in) throw std::runtime_error("load_field: truncated file " + path);
    return f;
}

void write_csv_slice(const std::string& path, const TensorField& f, int axis,
                     int index) {
    if (axis < 0 || axis > 2 || index < 0 || index >= f.grid.n[axis])
        throw std::invalid_argument("write_csv_slice: axis/index out of range");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_csv_slice: cannot open " + path);
    out << "x,y,z,c0,c1,c2,c3,c4\n";
    out.precision(17);
    int idx[3];
    const int a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
    idx[axis] = index;
    for (int u = 0; u < f.grid.n[a1]; ++u)
        for (int v = 0; v < f.grid.n[a2]; ++v) {
            idx[a1] = u;
            idx[a2] = v;
            const Vec3 x = f.grid.position(idx[0], idx[1], idx[2]);
            const QTensor q = f.at(f.grid.index(idx[0], idx[1], idx[2]));
            out << x[0] << ',' << x[1] << ',' << x[2];
            for (int m = 0; m < 5; ++m) out << ',' << q.c[m];
            out << '\n';
        }
}

} // namespace nemhom
