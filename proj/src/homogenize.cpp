#include "nemhom/homogenize.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "nemhom/quadrature.hpp"

namespace nemhom {

RotationField RotationField::constant(const Mat3& r) {
    if ((r * r.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-10 ||
        std::abs(r.determinant() - 1.0) > 1e-10)
        throw std::invalid_argument(
            "RotationField: matrix is not a rotation (orthogonal, det +1)");
    RotationField f;
    f.kind = Kind::Constant;
    f.fixed = r;
    return f;
}

RotationField RotationField::twist(const Vec3& axis, const Vec3& direction, double rate) {
    RotationField f;
    f.kind = Kind::Twist;
    f.twist_axis = axis.normalized();
    f.twist_direction = direction;
    f.twist_rate = rate;
    return f;
}

Mat3 RotationField::at(const Vec3& x) const {
    switch (kind) {
    case Kind::Identity: return Mat3::Identity();
    case Kind::Constant: return fixed;
    case Kind::Twist: {
        const double angle = twist_rate * twist_direction.dot(x);
        return Eigen::AngleAxisd(angle, twist_axis).toRotationMatrix();
    }
    case Kind::Callable: return callable(x);
    }
    return Mat3::Identity();
}

double DensityField::at(const Vec3& x) const {
    double v = base;
    for (const Box& b : boxes) {
        if (x[0] >= b.lo[0] && x[0] <= b.hi[0] && x[1] >= b.lo[1] && x[1] <= b.hi[1] &&
            x[2] >= b.lo[2] && x[2] <= b.hi[2])
            v = b.value;
    }
    return v;
}

double DensityField::max_value() const {
    double v = base;
    for (const Box& b : boxes) v = std::max(v, b.value);
    return v;
}

double f_hom_j(const SpeciesSpec& species, const QTensor& q, const Vec3& x, int order) {
    const Mat3 r = species.rotation.at(x);
    return quad_surface(
        species.shape,
        [&](const Vec3&, const Vec3& nu_out) {
            return f_surface(species.surface, q, Vec3(r * (-nu_out)));
        },
        order);
}

QTensor f_hom_j_grad(const SpeciesSpec& species, const QTensor& q, const Vec3& x,
                     int order) {
    if (!species.surface.has_gradient())
        throw std::runtime_error("f_hom_j_grad: surface density has no gradient");
    const Mat3 r = species.rotation.at(x);
    QTensor acc;
    for (const Patch& p : species.shape.patches) {
        const MappedRule ru = mapped_rule(order, p.u0, p.u1);
        const MappedRule rv = mapped_rule(order, p.v0, p.v1);
        for (int a = 0; a < order; ++a)
            for (int b = 0; b < order; ++b) {
                const SurfaceSample s = p.eval(ru.x[a], rv.x[b]);
                acc += (ru.w[a] * rv.w[b] * s.jacobian) *
                       f_surface_grad(species.surface, q, Vec3(r * (-s.normal)));
            }
    }
    return acc;
}

double f_hom(const std::vector<SpeciesSpec>& species, const QTensor& q, const Vec3& x,
             int order) {
    double sum = 0.0;
    for (const SpeciesSpec& sp : species) sum += sp.density.at(x) * f_hom_j(sp, q, x, order);
    return sum;
}

QTensor f_hom_grad(const std::vector<SpeciesSpec>& species, const QTensor& q,
                   const Vec3& x, int order) {
    QTensor sum;
    for (const SpeciesSpec& sp : species)
        sum += sp.density.at(x) * f_hom_j_grad(sp, q, x, order);
    return sum;
}

std::array<double, 6> decompose_in_mk(const SymMatrix& p) {
    Eigen::Matrix<double, 6, 6> gram;
    Eigen::Matrix<double, 6, 1> rhs;
    std::array<SymMatrix, 6> basis;
    for (int k = 0; k < 6; ++k) basis[k] = m_k(k + 1);
    for (int k = 0; k < 6; ++k) {
        rhs(k) = dot(p, basis[k]);
        for (int l = 0; l < 6; ++l) gram(k, l) = dot(basis[k], basis[l]);
    }
    Eigen::FullPivLU<Eigen::Matrix<double, 6, 6>> lu(gram);
    if (!lu.isInvertible())
        throw std::logic_error("decompose_in_mk: singular Gram matrix");
    const Eigen::Matrix<double, 6, 1> a = lu.solve(rhs);
    std::array<double, 6> out;
    for (int k = 0; k < 6; ++k) out[k] = a(k);
    return out;
}

std::vector<SpeciesSpec> DesignSpec::species(double density) const {
    std::vector<SpeciesSpec> out;
    for (const Component& c : components) {
        SpeciesSpec sp;
        sp.shape = c.shape;
        sp.rotation = RotationField::identity();
        sp.density = DensityField::constant(density);
        sp.surface = SurfaceDensity::rapini_papoular(w * c.intensity);
        out.push_back(std::move(sp));
    }
    SpeciesSpec sph;
    sph.shape = make_ball();
    sph.rotation = RotationField::identity();
    sph.density = DensityField::constant(density);
    sph.surface = SurfaceDensity::spherical_quadratic(spherical_coefficient);
    out.push_back(std::move(sph));
    return out;
}

DesignSpec design_linear_term(const SymMatrix& p, double w, double a, double a_prime,
                              int order) {
    DesignSpec d;
    d.target_p = p;
    d.w = w;
    d.a = a;
    d.a_prime = a_prime;
    d.basis_coefficients = decompose_in_mk(p);

    // Wedge components: the connected components of each catalogue assembly
    // with intensity -a_k/2. Components are rebuilt origin-centred (the
    // assembly's separating translation is irrelevant: the moment is
    // translation invariant, and reference shapes sit at the origin).
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (int k = 1; k <= 6; ++k) {
        const double intensity = -0.5 * d.basis_coefficients[k - 1];
        std::vector<Shape> comps;
        if (k <= 3) {
            const int ai = (k == 1) ? 1 : 0;
            const int aj = (k == 3) ? 1 : 2;
            comps.push_back(transform(make_wedge(ai, aj, +1, +1), Mat3::Identity(),
                                      inv_sqrt2, Vec3::Zero()));
            comps.push_back(transform(make_wedge(ai, aj, -1, +1), Mat3::Identity(),
                                      inv_sqrt2, Vec3::Zero()));
        } else {
            const int ai = (k == 6) ? 1 : 0;
            const int aj = (k == 4) ? 1 : 2;
            comps.push_back(make_wedge(ai, aj, +1, +1));
        }
        double assembly_area = 0.0;
        for (const Shape& c : comps) assembly_area += c.area;
        d.alpha_p += intensity * assembly_area;
        for (Shape& c : comps) {
            DesignSpec::Component comp;
            comp.shape = std::move(c);
            comp.intensity = intensity;
            comp.parent_assembly = k;
            d.components.push_back(std::move(comp));
        }
    }

    // Build the wedge-only species and measure, by quadrature, the tr(Q^2)
    // response and the constant offset. The residual after removing the
    // target linear term is an even quadratic in Q, so two evaluations pin it.
    std::vector<SpeciesSpec> wedge_species;
    {
        DesignSpec tmp = d;
        std::vector<SpeciesSpec> all = tmp.species();
        all.pop_back(); // without the spherical species
        wedge_species = std::move(all);
    }
    QTensor probe;
    probe.c = {0.3, -0.2, 0.1, 0.25, -0.15};
    const double f0 = f_hom(wedge_species, QTensor{}, Vec3::Zero(), order);
    const double fp = f_hom(wedge_species, probe, Vec3::Zero(), order);
    const double fm = f_hom(wedge_species, -probe, Vec3::Zero(), order);
    d.tr_q2_response = (fp + fm - 2.0 * f0) / (2.0 * probe.norm2());

    // Spherical species: per unit coefficient the response is isotropic in Q.
    SpeciesSpec unit_sphere;
    unit_sphere.shape = make_ball();
    unit_sphere.rotation = RotationField::identity();
    unit_sphere.density = DensityField::constant(1.0);
    unit_sphere.surface = SurfaceDensity::spherical_quadratic(1.0);
    const double sph_unit =
        f_hom_j(unit_sphere, probe, Vec3::Zero(), order) / probe.norm2();

    d.spherical_coefficient = (a_prime - a - d.tr_q2_response) / sph_unit;
    d.constant_offset = f0; // spherical part vanishes at Q = 0
    return d;
}

HomEvaluator::HomEvaluator(std::vector<SpeciesSpec> species, int custom_order,
                           bool drop_constant)
    : species_(std::move(species)), custom_order_(custom_order),
      drop_constant_(drop_constant) {
    int idx = 0;
    for (const SpeciesSpec& sp : species_) {
        Term t;
        t.kind = sp.surface.kind;
        t.strength = sp.surface.strength;
        t.area = sp.shape.area;
        t.ref_moment = sp.shape.moment;
        t.rotation = sp.rotation;
        t.density = sp.density;
        t.species_index = idx++;
        terms_.push_back(std::move(t));
    }
}

double HomEvaluator::term_value(const Term& t, const QTensor& q, const Vec3& x) const {
    switch (t.kind) {
    case SurfaceDensity::Kind::RapiniPapoular: {
        // W [ (2/3 + tr Q^2) sigma - 2 tr(Q R M R^T) ]
        const Mat3 r = t.rotation.at(x);
        const Mat3 m = r * t.ref_moment.matrix() * r.transpose();
        const double lin = dot(q, SymMatrix::from_matrix(m));
        return t.strength * ((2.0 / 3.0 + q.norm2()) * t.area - 2.0 * lin);
    }
    case SurfaceDensity::Kind::SphericalQuadratic: {
        const Mat3 r = t.rotation.at(x);
        const Mat3 m = r * t.ref_moment.matrix() * r.transpose();
        const Mat3 q2 = q.matrix() * q.matrix();
        return t.strength / (4.0 * M_PI) * (q2 * m).trace();
    }
    case SurfaceDensity::Kind::Custom:
        return f_hom_j(species_[t.species_index], q, x, custom_order_);
    }
    return 0.0;
}

QTensor HomEvaluator::term_grad(const Term& t, const QTensor& q, const Vec3& x) const {
    switch (t.kind) {
    case SurfaceDensity::Kind::RapiniPapoular: {
        const Mat3 r = t.rotation.at(x);
        const Mat3 m = r * t.ref_moment.matrix() * r.transpose();
        return 2.0 * t.strength * (t.area * q - deviatoric(m));
    }
    case SurfaceDensity::Kind::SphericalQuadratic: {
        const Mat3 r = t.rotation.at(x);
        const Mat3 m = r * t.ref_moment.matrix() * r.transpose();
        const Mat3 qm = q.matrix();
        return t.strength / (4.0 * M_PI) * deviatoric(Mat3(qm * m + m * qm));
    }
    case SurfaceDensity::Kind::Custom:
        return f_hom_j_grad(species_[t.species_index], q, x, custom_order_);
    }
    return QTensor{};
}

double HomEvaluator::value(const QTensor& q, const Vec3& x) const {
    double sum = 0.0;
    for (const Term& t : terms_) {
        const double xi = t.density.at(x);
        if (xi == 0.0) continue;
        double v = term_value(t, q, x);
        if (drop_constant_) v -= term_value(t, QTensor{}, x);
        sum += xi * v;
    }
    return sum;
}

QTensor HomEvaluator::grad(const QTensor& q, const Vec3& x) const {
    QTensor sum;
    for (const Term& t : terms_) {
        const double xi = t.density.at(x);
        if (xi == 0.0) continue;
        sum += xi * term_grad(t, q, x);
    }
    return sum;
}

double HomEvaluator::min_value(const Vec3& x) const {
    if (terms_.empty()) return 0.0;
    bool closed_form = true;
    for (const Term& t : terms_)
        if (t.kind == SurfaceDensity::Kind::Custom) closed_form = false;

    if (closed_form) {
        // Total is  alpha tr(Q^2) - 2 tr(Q B) + const + spherical part.
        // With spherical species present the quadratic is still of the form
        // alpha tr(Q^2) + tr(Q^2 A) - 2 tr(Q B) + const; minimise by a short
        // Newton run on the 5 coefficients (the closed form below covers the
        // pure Rapini-Papoular case exactly and seeds the iteration).
        double alpha = 0.0;
        Mat3 bmat = Mat3::Zero();
        bool quadratic_isotropic = true;
        for (const Term& t : terms_) {
            const double xi = t.density.at(x);
            if (xi == 0.0) continue;
            const Mat3 r = t.rotation.at(x);
            const Mat3 m = r * t.ref_moment.matrix() * r.transpose();
            if (t.kind == SurfaceDensity::Kind::RapiniPapoular) {
                alpha += xi * t.strength * t.area;
                bmat += xi * t.strength * m;
            } else {
                quadratic_isotropic = false;
            }
        }
        if (quadratic_isotropic) {
            if (alpha <= 0.0) {
                // Non-coercive pointwise quadratic; infimum is -inf for
                // alpha < 0, or the constant for alpha == 0 and B deviatoric 0.
                const QTensor b = deviatoric(bmat);
                if (alpha < 0.0 || b.norm() > 0.0)
                    return -std::numeric_limits<double>::infinity();
                return value(QTensor{}, x);
            }
            const QTensor qstar = (1.0 / alpha) * deviatoric(bmat);
            return value(qstar, x);
        }
    }

    // Gradient descent with backtracking from a few seeds.
    double best = value(QTensor{}, x);
    QTensor bq;
    for (int seed = 0; seed < 3; ++seed) {
        QTensor q;
        if (seed == 1) q.c = {0.4, 0.0, 0.0, 0.0, 0.0};
        if (seed == 2) q.c = {-0.3, 0.2, 0.1, -0.1, 0.05};
        double f = value(q, x);
        double step = 0.5;
        for (int it = 0; it < 400; ++it) {
            const QTensor g = grad(q, x);
            if (g.norm() < 1e-12) break;
            QTensor trial = q - step * g;
            double ft = value(trial, x);
            while (ft > f - 1e-4 * step * g.norm2() && step > 1e-14) {
                step *= 0.5;
                trial = q - step * g;
                ft = value(trial, x);
            }
            if (step <= 1e-14) break;
            q = trial;
            f = ft;
            step = std::min(step * 2.0, 4.0);
        }
        if (f < best) {
            best = f;
            bq = q;
        }
    }
    return best;
}

} // namespace nemhom
