#include "nemhom/shapes.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "nemhom/quadrature.hpp"

namespace nemhom {

double quad_patch(const Patch& patch,
                  const std::function<double(const Vec3&, const Vec3&)>& integrand,
                  int order) {
    if (order < 2) throw std::invalid_argument("quad_patch: order must be >= 2");
    const MappedRule ru = mapped_rule(order, patch.u0, patch.u1);
    const MappedRule rv = mapped_rule(order, patch.v0, patch.v1);
    double sum = 0.0;
    for (int a = 0; a < order; ++a) {
        double row = 0.0;
        for (int b = 0; b < order; ++b) {
            const SurfaceSample s = patch.eval(ru.x[a], rv.x[b]);
            row += rv.w[b] * s.jacobian * integrand(s.position, s.normal);
        }
        sum += ru.w[a] * row;
    }
    return sum;
}

double quad_surface(const Shape& shape,
                    const std::function<double(const Vec3&, const Vec3&)>& integrand,
                    int order) {
    double sum = 0.0;
    for (const Patch& p : shape.patches) sum += quad_patch(p, integrand, order);
    return sum;
}

SymMatrix moment_matrix(const Shape& shape, int order) {
    SymMatrix m;
    const int idx_i[6] = {0, 1, 2, 0, 0, 1};
    const int idx_j[6] = {0, 1, 2, 1, 2, 2};
    for (int e = 0; e < 6; ++e) {
        const int i = idx_i[e], j = idx_j[e];
        m.c[e] = quad_surface(
            shape, [&](const Vec3&, const Vec3& nu) { return nu[i] * nu[j]; }, order);
    }
    return m;
}

SymMatrix m_k(int k) {
    if (k < 1 || k > 6) throw std::out_of_range("m_k: k must be in 1..6");
    const double q = M_PI / 3.0 + M_PI / 2.0;
    const double p = M_PI / 2.0;
    Mat3 m = q * Mat3::Identity();
    if (k <= 3) {
        m(k - 1, k - 1) -= p;
    } else {
        // Deficit axis and off-diagonal pair for k = 4, 5, 6.
        const int axis[3] = {2, 1, 0};
        const int oi[3] = {0, 0, 1};
        const int oj[3] = {1, 2, 2};
        m(axis[k - 4], axis[k - 4]) -= p;
        m(oi[k - 4], oj[k - 4]) += 2.0 / 3.0;
        m(oj[k - 4], oi[k - 4]) += 2.0 / 3.0;
    }
    return SymMatrix::from_matrix(m);
}

namespace {

void finalize(Shape& s, int order = kDefaultQuadOrder) {
    s.area = quad_surface(s, [](const Vec3&, const Vec3&) { return 1.0; }, order);
    s.moment = moment_matrix(s, order);
    if (!(s.area > 0.0)) throw std::logic_error("shape '" + s.name + "': non-positive area");
}

Patch sphere_patch(double radius, double th0, double th1, double ph0, double ph1) {
    Patch p;
    p.u0 = th0;
    p.u1 = th1;
    p.v0 = ph0;
    p.v1 = ph1;
    p.label = "sphere";
    p.eval = [radius](double th, double ph) {
        const Vec3 n(std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th));
        return SurfaceSample{radius * n, n, radius * radius * std::sin(th)};
    };
    return p;
}

// Flat half-disc of given radius in the plane through the origin spanned by
// (span_a, span_b), covering polar angles [psi0, psi1]; fixed outward normal.
Patch disc_patch(double radius, const Vec3& span_a, const Vec3& span_b, double psi0,
                 double psi1, const Vec3& outward) {
    Patch p;
    p.u0 = 0.0;
    p.u1 = radius;
    p.v0 = psi0;
    p.v1 = psi1;
    p.label = "disc";
    p.eval = [span_a, span_b, outward](double r, double psi) {
        const Vec3 pos = r * (std::cos(psi) * span_a + std::sin(psi) * span_b);
        return SurfaceSample{pos, outward, r};
    };
    return p;
}

Vec3 axis_vec(int a) {
    Vec3 v = Vec3::Zero();
    v[a] = 1.0;
    return v;
}

} // namespace

Shape make_ball(double radius) {
    Shape s;
    s.name = "ball";
    s.patches.push_back(sphere_patch(radius, 0.0, M_PI, 0.0, 2.0 * M_PI));
    s.contains = [radius](const Vec3& x) { return x.norm() <= radius; };
    s.circumradius = radius;
    finalize(s);
    return s;
}

Shape make_wedge(int axis_i, int axis_j, int sign_i, int sign_j) {
    if (axis_i == axis_j || axis_i < 0 || axis_j < 0 || axis_i > 2 || axis_j > 2)
        throw std::invalid_argument("make_wedge: axes must be distinct and in 0..2");
    if (std::abs(sign_i) != 1 || std::abs(sign_j) != 1)
        throw std::invalid_argument("make_wedge: signs must be +-1");

    const double si = sign_i, sj = sign_j;
    const int free_axis = 3 - axis_i - axis_j;
    Shape s;
    {
        std::ostringstream n;
        n << "wedge(" << (sign_i > 0 ? "+" : "-") << axis_i + 1
          << (sign_j > 0 ? "+" : "-") << axis_j + 1 << ")";
        s.name = n.str();
    }

    // Spherical patch: unit directions with si*x_i >= 0 and sj*x_j >= 0. Use
    // spherical coordinates with the pole on the free axis so the constrained
    // quadrant is an azimuth interval.
    {
        Patch p;
        p.u0 = 0.0;
        p.u1 = M_PI;
        p.v0 = 0.0;
        p.v1 = M_PI / 2.0;
        p.label = "sphere";
        const Vec3 ei = si * axis_vec(axis_i), ej = sj * axis_vec(axis_j);
        const Vec3 ek = axis_vec(free_axis);
        p.eval = [ei, ej, ek](double th, double ph) {
            const Vec3 n = std::sin(th) * (std::cos(ph) * ei + std::sin(ph) * ej) +
                           std::cos(th) * ek;
            return SurfaceSample{n, n, std::sin(th)};
        };
        s.patches.push_back(p);
    }
    // Two flat half-discs: on {x_i = 0} with sj*x_j >= 0, outward -si*e_i, and
    // symmetrically on {x_j = 0}.
    s.patches.push_back(disc_patch(1.0, sj * axis_vec(axis_j), axis_vec(free_axis),
                                   -M_PI / 2.0, M_PI / 2.0, -si * axis_vec(axis_i)));
    s.patches.push_back(disc_patch(1.0, si * axis_vec(axis_i), axis_vec(free_axis),
                                   -M_PI / 2.0, M_PI / 2.0, -sj * axis_vec(axis_j)));

    s.contains = [axis_i, axis_j, si, sj](const Vec3& x) {
        return x.norm() <= 1.0 && si * x[axis_i] >= 0.0 && sj * x[axis_j] >= 0.0;
    };
    s.circumradius = 1.0;
    finalize(s);
    return s;
}

namespace {

Shape union_shape(const std::string& name, std::vector<Shape> parts) {
    Shape s;
    s.name = name;
    s.components = std::move(parts);
    for (const Shape& c : s.components)
        s.patches.insert(s.patches.end(), c.patches.begin(), c.patches.end());
    s.convex = s.components.size() <= 1;
    auto components = s.components; // captured copy for the predicate
    s.contains = [components](const Vec3& x) {
        for (const Shape& c : components)
            if (c.contains && c.contains(x)) return true;
        return false;
    };
    for (const Shape& c : s.components)
        s.circumradius = std::max(s.circumradius, c.circumradius);
    finalize(s);
    return s;
}

} // namespace

Shape make_assembly(int k) {
    if (k < 1 || k > 6) throw std::out_of_range("make_assembly: k must be in 1..6");
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    std::ostringstream n;
    n << "assembly" << k;
    if (k <= 3) {
        // Paired plus/minus wedges on the axes other than k, scaled by
        // 1/sqrt(2) so the pair's moment equals m_k; minus part translated
        // one unit down its first constrained axis to keep the parts apart.
        int ai, aj;
        Vec3 shift;
        if (k == 1) {
            ai = 1; aj = 2; shift = Vec3(0.0, -1.0, 0.0);
        } else if (k == 2) {
            ai = 0; aj = 2; shift = Vec3(-1.0, 0.0, 0.0);
        } else {
            ai = 0; aj = 1; shift = Vec3(-1.0, 0.0, 0.0);
        }
        Shape plus = transform(make_wedge(ai, aj, +1, +1), Mat3::Identity(), inv_sqrt2,
                               Vec3::Zero());
        Shape minus = transform(make_wedge(ai, aj, -1, +1), Mat3::Identity(), inv_sqrt2,
                                shift);
        return union_shape(n.str(), {plus, minus});
    }
    int ai, aj;
    if (k == 4) {
        ai = 0; aj = 1;
    } else if (k == 5) {
        ai = 0; aj = 2;
    } else {
        ai = 1; aj = 2;
    }
    Shape w = make_wedge(ai, aj, +1, +1);
    return union_shape(n.str(), {w});
}

Shape transform(const Shape& shape, const Mat3& rotation, double scale,
                const Vec3& translation) {
    if ((rotation * rotation.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-10)
        throw std::invalid_argument("transform: rotation is not orthogonal");
    if (!(scale > 0.0)) throw std::invalid_argument("transform: scale must be > 0");

    Shape out;
    out.name = shape.name;
    out.convex = shape.convex;
    for (const Patch& p : shape.patches) {
        Patch q = p;
        auto base = p.eval;
        q.eval = [base, rotation, scale, translation](double u, double v) {
            SurfaceSample s = base(u, v);
            s.position = translation + scale * (rotation * s.position);
            s.normal = rotation * s.normal;
            s.jacobian *= scale * scale;
            return s;
        };
        out.patches.push_back(q);
    }
    out.area = shape.area * scale * scale;
    out.moment = SymMatrix::from_matrix(
        Mat3(scale * scale * rotation * shape.moment.matrix() * rotation.transpose()));
    if (shape.contains) {
        auto base_contains = shape.contains;
        out.contains = [base_contains, rotation, scale, translation](const Vec3& x) {
            return base_contains(rotation.transpose() * (x - translation) / scale);
        };
    }
    out.circumradius = scale * shape.circumradius + translation.norm();
    for (const Shape& c : shape.components)
        out.components.push_back(transform(c, rotation, scale, translation));
    return out;
}

namespace {

int wedge_name_error(const std::string& name) {
    std::ostringstream msg;
    msg << "unknown shape '" << name << "'; catalogue:";
    for (const std::string& n : catalogue_names()) msg << " " << n;
    throw std::invalid_argument(msg.str());
}

} // namespace

Shape shape_by_name(const std::string& name) {
    if (name == "ball") return make_ball();
    if (name.rfind("assembly", 0) == 0 && name.size() == 9) {
        const int k = name[8] - '0';
        if (k >= 1 && k <= 6) return make_assembly(k);
    }
    if (name.rfind("wedge", 0) == 0 && name.size() == 8) {
        const char sign = name[5];
        const int i = name[6] - '1', j = name[7] - '1';
        if (i >= 0 && i < 3 && j >= 0 && j < 3 && i != j) {
            if (sign == '+') return make_wedge(std::min(i, j), std::max(i, j), +1, +1);
            // Minus wedges exist only for i < j.
            if (sign == '-' && i < j) return make_wedge(i, j, -1, +1);
        }
    }
    wedge_name_error(name);
    return Shape{}; // unreachable
}

std::vector<std::string> catalogue_names() {
    std::vector<std::string> names = {"ball"};
    const char* plus[] = {"wedge+12", "wedge+13", "wedge+23"};
    const char* minus[] = {"wedge-12", "wedge-13", "wedge-23"};
    names.insert(names.end(), std::begin(plus), std::end(plus));
    names.insert(names.end(), std::begin(minus), std::end(minus));
    for (int k = 1; k <= 6; ++k) names.push_back("assembly" + std::to_string(k));
    return names;
}

} // namespace nemhom
