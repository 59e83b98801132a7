#include "nemhom/energy.hpp"

#include <algorithm>
#include <cmath>

namespace nemhom {

ElasticParams::ElasticParams(double l1, double l2, double l3) : L1(l1), L2(l2), L3(l3) {
    if (!(L1 > 0.0))
        throw std::invalid_argument("ElasticParams: L1 > 0 required");
    if (!(-L1 < L3 && L3 < 2.0 * L1))
        throw std::invalid_argument("ElasticParams: -L1 < L3 < 2*L1 required");
    if (!(L2 > -0.6 * L1 - 0.1 * L3))
        throw std::invalid_argument("ElasticParams: L2 > -(3/5)L1 - (1/10)L3 required");
}

BulkParams::BulkParams(double a_, double b_, double c_) : a(a_), b(b_), c(c_) {
    kappa = kappa_of(a, b, c);
}

double kappa_of(double a, double b, double c) {
    if (!(c > 0.0))
        throw std::invalid_argument("kappa_of: c > 0 required (quartic unbounded below otherwise)");
    // h(s) = (2a/3) s^2 - (2b/9) s^3 + (4c/9) s^4; stationary points solve
    // s * ((16c/9) s^2 - (2b/3) s + 4a/3) = 0.
    auto h = [&](double s) {
        const double s2 = s * s;
        return (2.0 * a / 3.0) * s2 - (2.0 * b / 9.0) * s2 * s + (4.0 * c / 9.0) * s2 * s2;
    };
    double hmin = 0.0; // s = 0
    const double qa = 16.0 * c / 9.0, qb = -2.0 * b / 3.0, qc = 4.0 * a / 3.0;
    const double disc = qb * qb - 4.0 * qa * qc;
    if (disc >= 0.0) {
        const double sq = std::sqrt(disc);
        // Numerically stable quadratic roots.
        const double t = -0.5 * (qb + (qb >= 0.0 ? sq : -sq));
        const double r1 = t / qa;
        hmin = std::min(hmin, h(r1));
        if (t != 0.0) hmin = std::min(hmin, h(qc / t));
    }
    return -hmin;
}

namespace {

// Full index view of a gradient slot: g[i][j][k] = d_k Q_ij.
void fill_full(const GradientSlot& d, double g[3][3][3]) {
    for (int k = 0; k < 3; ++k) {
        const Mat3 m = d.d[k].matrix();
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) g[i][j][k] = m(i, j);
    }
}

} // namespace

double f_elastic(const GradientSlot& grad_q, const ElasticParams& p) {
    double g[3][3][3];
    fill_full(grad_q, g);

    double t1 = 0.0; // d_k Q_ij d_k Q_ij
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) t1 += g[i][j][k] * g[i][j][k];

    double t2 = 0.0; // (d_j Q_ij)(d_k Q_ik)
    for (int i = 0; i < 3; ++i) {
        double div = 0.0;
        for (int j = 0; j < 3; ++j) div += g[i][j][j];
        t2 += div * div;
    }

    double t3 = 0.0; // d_j Q_ik d_k Q_ij
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) t3 += g[i][k][j] * g[i][j][k];

    return p.L1 * t1 + p.L2 * t2 + p.L3 * t3;
}

GradientSlot f_elastic_grad(const GradientSlot& grad_q, const ElasticParams& p) {
    double g[3][3][3];
    fill_full(grad_q, g);

    double div[3];
    for (int i = 0; i < 3; ++i) {
        div[i] = 0.0;
        for (int j = 0; j < 3; ++j) div[i] += g[i][j][j];
    }

    // Unconstrained derivative w.r.t. g[a][b][c], then projected onto the
    // symmetric-traceless pair (a,b) by contraction with the basis.
    double full[3][3][3];
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
            for (int cc = 0; cc < 3; ++cc)
                full[a][b][cc] = 2.0 * p.L1 * g[a][b][cc] +
                                 2.0 * p.L2 * div[a] * (b == cc ? 1.0 : 0.0) +
                                 2.0 * p.L3 * g[a][cc][b];

    GradientSlot out;
    for (int k = 0; k < 3; ++k) {
        for (int m = 0; m < 5; ++m) {
            const Mat3 e = s0_basis_matrix(m);
            double s = 0.0;
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) s += full[i][j][k] * e(i, j);
            out.d[k].c[m] = s;
        }
    }
    return out;
}

double f_bulk(const QTensor& q, const BulkParams& p) {
    const double t = q.norm2(); // tr(Q^2)
    const Mat3 m = q.matrix();
    const double u = (m * m * m).trace();
    return p.a * t - p.b * u + p.c * t * t + p.kappa;
}

QTensor f_bulk_grad(const QTensor& q, const BulkParams& p) {
    const double t = q.norm2();
    QTensor grad = (2.0 * p.a + 4.0 * p.c * t) * q;
    if (p.b != 0.0) {
        const Mat3 m = q.matrix();
        grad -= 3.0 * p.b * deviatoric(Mat3(m * m));
    }
    return grad;
}

double f_surface(const SurfaceDensity& s, const QTensor& q, const Vec3& nu) {
    switch (s.kind) {
    case SurfaceDensity::Kind::RapiniPapoular: {
        // W (tr Q^2 - 2 tr(Q Q_nu) + 2/3)
        const Mat3 m = q.matrix();
        const double qnn = nu.dot(m * nu);
        return s.strength * (q.norm2() - 2.0 * qnn + 2.0 / 3.0);
    }
    case SurfaceDensity::Kind::SphericalQuadratic: {
        const Mat3 m = q.matrix();
        const Vec3 mn = m * nu;
        return s.strength / (4.0 * M_PI) * mn.squaredNorm();
    }
    case SurfaceDensity::Kind::Custom:
        return s.custom.value(q, nu);
    }
    return 0.0;
}

QTensor f_surface_grad(const SurfaceDensity& s, const QTensor& q, const Vec3& nu) {
    switch (s.kind) {
    case SurfaceDensity::Kind::RapiniPapoular: {
        // 2W (Q - Q_nu); tr(Q Q_nu) = tr(Q nu nu^T) since Q is traceless.
        QTensor grad = 2.0 * s.strength * q;
        grad -= 2.0 * s.strength * deviatoric(Mat3(nu * nu.transpose()));
        return grad;
    }
    case SurfaceDensity::Kind::SphericalQuadratic: {
        const Mat3 m = q.matrix();
        const Mat3 nn = nu * nu.transpose();
        return s.strength / (4.0 * M_PI) * deviatoric(Mat3(m * nn + nn * m));
    }
    case SurfaceDensity::Kind::Custom:
        if (!s.custom.grad)
            throw std::runtime_error("SurfaceDensity '" + s.custom.name +
                                     "': no gradient supplied");
        return s.custom.grad(q, nu);
    }
    return QTensor{};
}

} // namespace nemhom
