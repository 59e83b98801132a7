#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "nemhom/qtensor.hpp"

namespace nemhom {

// Axis-aligned box container with a node-centred regular grid (nodes include
// the boundary faces). Resolution >= 4 per axis.
struct GridSpec {
    Vec3 lo = Vec3::Zero();
    Vec3 hi = Vec3::Ones();
    int n[3] = {0, 0, 0};
    double h[3] = {0.0, 0.0, 0.0};

    GridSpec() = default;
    GridSpec(const Vec3& lo_, const Vec3& hi_, int nx, int ny, int nz);

    std::size_t node_count() const {
        return std::size_t(n[0]) * std::size_t(n[1]) * std::size_t(n[2]);
    }
    std::size_t index(int i, int j, int k) const {
        return (std::size_t(i) * n[1] + j) * n[2] + k;
    }
    Vec3 position(int i, int j, int k) const {
        return Vec3(lo[0] + i * h[0], lo[1] + j * h[1], lo[2] + k * h[2]);
    }
    bool on_boundary(int i, int j, int k) const {
        return i == 0 || j == 0 || k == 0 || i == n[0] - 1 || j == n[1] - 1 ||
               k == n[2] - 1;
    }
    double volume() const {
        return (hi[0] - lo[0]) * (hi[1] - lo[1]) * (hi[2] - lo[2]);
    }
    // Trapezoidal node weight (cell volume times 1/2 per boundary face hit).
    double weight(int i, int j, int k) const {
        double w = h[0] * h[1] * h[2];
        if (i == 0 || i == n[0] - 1) w *= 0.5;
        if (j == 0 || j == n[1] - 1) w *= 0.5;
        if (k == 0 || k == n[2] - 1) w *= 0.5;
        return w;
    }
};

// Dirichlet boundary data: a bounded Lipschitz map into the Q-tensor space,
// evaluable on the whole container closure (the mollified-recovery
// construction extends it inward). Built-ins: constant tensor; uniaxial
// s (n n^T - Id/3) with a constant or in-plane rotating director.
struct BoundaryData {
    enum class Kind { Constant, Uniaxial, Callable };
    Kind kind = Kind::Constant;
    QTensor q0;
    double s = 0.0;
    Vec3 director = Vec3::UnitZ();
    Vec3 wave_vector = Vec3::Zero(); // director rotates by wave_vector . x in-plane
    std::function<QTensor(const Vec3&)> callable;
    double lipschitz = 0.0; // declared, not certified

    static BoundaryData constant(const QTensor& q);
    static BoundaryData uniaxial(double s, const Vec3& director,
                                 const Vec3& wave_vector = Vec3::Zero());
    static BoundaryData from_function(std::function<QTensor(const Vec3&)> f,
                                      double lipschitz);

    QTensor at(const Vec3& x) const;
};

// Q-tensor field on a grid, five coefficients per node. Boundary nodes hold
// the Dirichlet data exactly.
struct TensorField {
    GridSpec grid;
    std::vector<double> coeff; // 5 * node_count, node-major
    BoundaryData boundary;

    TensorField() = default;
    TensorField(const GridSpec& g, const BoundaryData& b);

    QTensor at(std::size_t node) const {
        QTensor q;
        for (int m = 0; m < 5; ++m) q.c[m] = coeff[5 * node + m];
        return q;
    }
    void set(std::size_t node, const QTensor& q) {
        for (int m = 0; m < 5; ++m) coeff[5 * node + m] = q.c[m];
    }

    void apply_boundary();
    void fill_constant(const QTensor& q); // interior only, then apply_boundary
    void fill_function(const std::function<QTensor(const Vec3&)>& f);
    // Component-wise discrete Laplace fill from the boundary data (conjugate
    // gradient on the interior unknowns).
    void fill_harmonic(double tol = 1e-10, int max_iters = 20000);
};

// Discrete norms (trapezoidal weights; gradient by the same central/one-sided
// stencils the energy uses).
double field_l2_norm(const TensorField& f);
double field_l2_distance(const TensorField& a, const TensorField& b);
double field_h1_distance(const TensorField& a, const TensorField& b);
double field_sup_distance(const TensorField& a, const TensorField& b);

// Flat binary dump: header (magic "NMQF", version, dims, spacing, origin,
// basis note) + 5 little-endian float64 per node. Documented in README.
void save_field(const std::string& path, const TensorField& f);
TensorField load_field(const std::string& path);

// CSV slice (axis in 0..2, node index along it) for plotting.
void write_csv_slice(const std::string& path, const TensorField& f, int axis,
                     int index);

} // namespace nemhom
