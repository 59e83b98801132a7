#pragma once

#include <array>
#include <functional>
#include <optional>
#include <vector>

#include "nemhom/energy.hpp"
#include "nemhom/shapes.hpp"

namespace nemhom {

// Lipschitz map from the container to rotation matrices. Constant fields get
// a fast path; "twist" rotates about a fixed axis by rate * (direction . x).
struct RotationField {
    enum class Kind { Identity, Constant, Twist, Callable };
    Kind kind = Kind::Identity;
    Mat3 fixed = Mat3::Identity();
    Vec3 twist_axis = Vec3::UnitZ();
    Vec3 twist_direction = Vec3::UnitX();
    double twist_rate = 0.0;
    std::function<Mat3(const Vec3&)> callable;

    static RotationField identity() { return RotationField{}; }
    static RotationField constant(const Mat3& r);
    static RotationField twist(const Vec3& axis, const Vec3& direction, double rate);

    Mat3 at(const Vec3& x) const;
    bool is_constant() const { return kind == Kind::Identity || kind == Kind::Constant; }
};

// Number density of one inclusion population, in the lattice-normalized sense
// (a full pitch-eps lattice realizes density 1).
struct DensityField {
    struct Box {
        Vec3 lo, hi;
        double value;
    };
    double base = 1.0;       // value outside all boxes
    std::vector<Box> boxes;  // later boxes override earlier ones

    static DensityField constant(double v) {
        DensityField d;
        d.base = v;
        return d;
    }
    double at(const Vec3& x) const;
    double max_value() const;
    bool is_constant() const { return boxes.empty(); }
};

// One colloid population: reference shape, rotation rule, number density, and
// surface anchoring density.
struct SpeciesSpec {
    Shape shape;
    RotationField rotation;
    DensityField density;
    SurfaceDensity surface;
};

// Homogenised potential of one species at (Q, x): surface quadrature of
// f_s(Q, R(x) * nu_in) over the reference shape, with nu_in the inward unit
// normal (the geometry layer stores outward normals; the sign is flipped
// here, observable only for densities that are odd in nu).
double f_hom_j(const SpeciesSpec& species, const QTensor& q, const Vec3& x,
               int order = 16);
QTensor f_hom_j_grad(const SpeciesSpec& species, const QTensor& q, const Vec3& x,
                     int order = 16);

// Density-weighted sum over species.
double f_hom(const std::vector<SpeciesSpec>& species, const QTensor& q, const Vec3& x,
             int order = 16);
QTensor f_hom_grad(const std::vector<SpeciesSpec>& species, const QTensor& q,
                   const Vec3& x, int order = 16);

// Coefficients a of P = sum_k a_k M_k over the analytic basis m_k(1..6),
// via the 6x6 Gram solve (the basis is not orthonormal).
std::array<double, 6> decompose_in_mk(const SymMatrix& p);

// Inverse design output: wedge components with Rapini-Papoular strengths
// W * i_j plus one spherical species, calibrated so that the total f_hom
// equals (a' - a) tr(Q^2) + W tr(QP) up to a Q-independent constant.
struct DesignSpec {
    struct Component {
        Shape shape;         // origin-centred wedge, possibly scaled
        double intensity;    // i_j
        int parent_assembly; // 1..6
    };
    std::vector<Component> components;
    double spherical_coefficient = 0.0; // SphericalQuadratic coefficient (includes calibration)
    std::array<double, 6> basis_coefficients{}; // a_k
    double alpha_p = 0.0;                       // sum_k i_k * sigma(dP_k)
    SymMatrix target_p;
    double w = 0.0, a = 0.0, a_prime = 0.0;
    // Measured by quadrature, reported rather than trusted:
    double constant_offset = 0.0;   // total f_hom at Q = 0
    double tr_q2_response = 0.0;    // wedge-part tr(Q^2) coefficient before calibration

    std::vector<SpeciesSpec> species(double density = 1.0) const;
};

DesignSpec design_linear_term(const SymMatrix& p, double w, double a, double a_prime,
                              int order = 16);

// Pointwise evaluator used by the solvers. For the built-in densities the
// surface integral reduces exactly to the shape's area and normal moment, so
// evaluation is O(1) per point; Custom densities fall back to quadrature.
// The fast path is checked against direct quadrature of the definition in the
// test suite.
class HomEvaluator {
public:
    HomEvaluator() = default;
    explicit HomEvaluator(std::vector<SpeciesSpec> species, int custom_order = 16,
                          bool drop_constant = false);

    double value(const QTensor& q, const Vec3& x) const;
    QTensor grad(const QTensor& q, const Vec3& x) const;

    // Pointwise infimum over Q (closed form for pure Rapini-Papoular +
    // spherical species lists; gradient-descent polish otherwise).
    double min_value(const Vec3& x) const;

    bool empty() const { return terms_.empty(); }
    const std::vector<SpeciesSpec>& species() const { return species_; }

private:
    struct Term {
        SurfaceDensity::Kind kind;
        double strength;
        double area;
        SymMatrix ref_moment; // reference-shape moment (outward == inward for nu nu^T)
        RotationField rotation;
        DensityField density;
        int species_index;
    };
    std::vector<SpeciesSpec> species_;
    std::vector<Term> terms_;
    int custom_order_ = 16;
    bool drop_constant_ = false;

    double term_value(const Term& t, const QTensor& q, const Vec3& x) const;
    QTensor term_grad(const Term& t, const QTensor& q, const Vec3& x) const;
};

} // namespace nemhom
