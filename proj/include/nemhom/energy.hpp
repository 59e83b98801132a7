#pragma once

#include <functional>
#include <stdexcept>
#include <string>

#include "nemhom/qtensor.hpp"

namespace nemhom {

// Elastic coefficients of the three-constant quadratic form
//   L1 d_k Q_ij d_k Q_ij + L2 d_j Q_ij d_k Q_ik + L3 d_j Q_ik d_k Q_ij.
// Construction enforces the coercivity region
//   L1 > 0,  -L1 < L3 < 2 L1,  L2 > -(3/5) L1 - (1/10) L3.
struct ElasticParams {
    double L1, L2, L3;
    ElasticParams(double l1, double l2, double l3);
};

// Quartic bulk potential a tr(Q^2) - b tr(Q^3) + c (tr Q^2)^2 + kappa, with
// kappa chosen so the infimum over the Q-tensor space is zero.
struct BulkParams {
    double a, b, c;
    double kappa; // cached at construction
    BulkParams(double a_, double b_, double c_);
};

// -min over Q-tensors of a tr(Q^2) - b tr(Q^3) + c (tr Q^2)^2.
// The minimiser is uniaxial, Q = s(n n^T - Id/3); the scalar quartic
//   h(s) = (2a/3) s^2 - (2b/9) s^3 + (4c/9) s^4
// is minimised in closed form over the real roots of h'.
double kappa_of(double a, double b, double c);

// Gradient of a Q-tensor field at a point: column k holds the derivative of Q
// along axis k, each column a valid coefficient vector.
struct GradientSlot {
    QTensor d[3];

    double norm2() const { return d[0].norm2() + d[1].norm2() + d[2].norm2(); }
    GradientSlot& operator+=(const GradientSlot& o) {
        for (int k = 0; k < 3; ++k) d[k] += o.d[k];
        return *this;
    }
    GradientSlot& operator*=(double s) {
        for (int k = 0; k < 3; ++k) d[k] *= s;
        return *this;
    }
    friend GradientSlot operator+(GradientSlot a, const GradientSlot& b) { return a += b; }
    friend GradientSlot operator*(double s, GradientSlot a) { return a *= s; }
};

inline double dot(const GradientSlot& a, const GradientSlot& b) {
    return dot(a.d[0], b.d[0]) + dot(a.d[1], b.d[1]) + dot(a.d[2], b.d[2]);
}

// Surface anchoring density. Built-ins:
//   RapiniPapoular:      W tr(Q - Q_nu)^2, Q_nu = nu nu^T - Id/3
//   SphericalQuadratic:  (coefficient / 4 pi) (nu . Q^2 nu)
// Custom densities supply their own value (and gradient if used by the
// homogenised machinery) and must declare whether they are bounded below,
// which the strong-anchoring mode checks.
struct SurfaceDensity {
    enum class Kind { RapiniPapoular, SphericalQuadratic, Custom };

    struct CustomFns {
        std::string name;
        std::function<double(const QTensor&, const Vec3&)> value;
        std::function<QTensor(const QTensor&, const Vec3&)> grad; // may be empty
        bool bounded_below = false;
        bool even_in_normal = true;
    };

    Kind kind = Kind::RapiniPapoular;
    double strength = 0.0; // W for RapiniPapoular, coefficient for SphericalQuadratic
    CustomFns custom;

    static SurfaceDensity rapini_papoular(double w) {
        SurfaceDensity s;
        s.kind = Kind::RapiniPapoular;
        s.strength = w;
        return s;
    }
    static SurfaceDensity spherical_quadratic(double coef) {
        SurfaceDensity s;
        s.kind = Kind::SphericalQuadratic;
        s.strength = coef;
        return s;
    }
    static SurfaceDensity custom_density(CustomFns fns) {
        SurfaceDensity s;
        s.kind = Kind::Custom;
        s.custom = std::move(fns);
        return s;
    }

    bool bounded_below() const {
        switch (kind) {
        case Kind::RapiniPapoular: return strength >= 0.0;
        case Kind::SphericalQuadratic: return strength >= 0.0;
        case Kind::Custom: return custom.bounded_below;
        }
        return false;
    }
    bool even_in_normal() const {
        return kind == Kind::Custom ? custom.even_in_normal : true;
    }
    bool has_gradient() const {
        return kind == Kind::Custom ? static_cast<bool>(custom.grad) : true;
    }
};

double f_elastic(const GradientSlot& grad_q, const ElasticParams& p);
GradientSlot f_elastic_grad(const GradientSlot& grad_q, const ElasticParams& p);

double f_bulk(const QTensor& q, const BulkParams& p);
QTensor f_bulk_grad(const QTensor& q, const BulkParams& p);

// nu is assumed unit (geometry layers guarantee it).
double f_surface(const SurfaceDensity& s, const QTensor& q, const Vec3& nu);
QTensor f_surface_grad(const SurfaceDensity& s, const QTensor& q, const Vec3& nu);

} // namespace nemhom
