#pragma once

#include <functional>
#include <string>
#include <vector>

#include "nemhom/qtensor.hpp"

namespace nemhom {

// One smooth boundary piece: a map from a parameter rectangle into space that
// supplies position, outward unit normal, and area Jacobian at any parameter
// point. Jacobian > 0 on the open rectangle; edge/corner sets have measure
// zero and are never special-cased.
struct SurfaceSample {
    Vec3 position;
    Vec3 normal; // unit, outward from the body
    double jacobian;
};

struct Patch {
    double u0, u1, v0, v1;
    std::function<SurfaceSample(double, double)> eval;
    std::string label;
};

// Convex reference body: parameterized boundary patches plus precomputed area
// and normal second moment (entries of the integral of nu nu^T over the
// boundary; all stored normals point outward).
struct Shape {
    std::string name;
    std::vector<Patch> patches;
    bool convex = true;

    double area = 0.0;   // sigma(dP), quadrature at construction order
    SymMatrix moment;    // integral of nu nu^T dsigma

    std::function<bool(const Vec3&)> contains; // empty for patch-only shapes
    double circumradius = 0.0;                 // max |x| over the body

    // Connected components, stored separately for assemblies (the inverse
    // design re-labels them as species). Empty for single bodies.
    std::vector<Shape> components;
};

constexpr int kDefaultQuadOrder = 32;

// Tensor-product Gauss-Legendre quadrature of integrand(point, outward normal)
// over the whole boundary, summed over patches. Deterministic for fixed order.
double quad_surface(const Shape& shape,
                    const std::function<double(const Vec3&, const Vec3&)>& integrand,
                    int order);

double quad_patch(const Patch& patch,
                  const std::function<double(const Vec3&, const Vec3&)>& integrand,
                  int order);

// Entrywise quadrature of nu nu^T over the boundary.
SymMatrix moment_matrix(const Shape& shape, int order);

// The six analytic moment matrices of the assembly catalogue, k in 1..6:
//   M_k = (pi/3 + pi/2) Id - (pi/2) e_k e_k^T                    (k = 1,2,3)
//   M_4 = (pi/3 + pi/2) Id - (pi/2) e_3 e_3^T + (2/3)(e_1 e_2^T + e_2 e_1^T)
//   M_5 = ... (e_1 e_3 pair, -pi/2 on axis 2)
//   M_6 = ... (e_2 e_3 pair, -pi/2 on axis 1)
SymMatrix m_k(int k);

// Affine image of a shape: patches mapped by x -> translation + scale * R x.
// Area scales by scale^2 and the moment conjugates as scale^2 R M R^T.
// Rejects non-orthogonal rotations (tolerance 1e-10) and scale <= 0.
Shape transform(const Shape& shape, const Mat3& rotation, double scale,
                const Vec3& translation);

// Catalogue construction. Quarter-ball wedges are built from one spherical
// quadrant patch and two flat half-disc patches.
Shape make_ball(double radius = 1.0);
// wedge axes i < j in 0..2, with sign constraints si*x_i >= 0, sj*x_j >= 0.
Shape make_wedge(int axis_i, int axis_j, int sign_i, int sign_j);
// Assemblies k in 1..6. For k <= 3 these are the wedge pairs (plus and minus
// type) with the pair translated apart, each wedge scaled by 1/sqrt(2) so the
// pair's moment equals the analytic m_k exactly; for k in 4..6 single plus
// wedges. All have area 2*pi and moment m_k.
Shape make_assembly(int k);

// Name-based catalogue access ("ball", "wedge+12", "wedge-12", "assembly1",
// ...). Plus wedges accept both axis orders; minus wedges only i < j.
// Unknown names throw with the catalogue listing in the message.
Shape shape_by_name(const std::string& name);
std::vector<std::string> catalogue_names();

} // namespace nemhom
