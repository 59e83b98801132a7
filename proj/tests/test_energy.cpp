#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include <Eigen/Dense>

#include "nemhom/energy.hpp"
#include "nemhom/reference.hpp"

using namespace nemhom;

namespace {

std::mt19937_64 rng(77001);

QTensor random_q(double radius = 1.0) {
    std::uniform_real_distribution<double> u(-radius, radius);
    QTensor q;
    for (int m = 0; m < 5; ++m) q.c[m] = u(rng);
    return q;
}

GradientSlot random_slot(double radius = 1.0) {
    GradientSlot d;
    for (int k = 0; k < 3; ++k) d.d[k] = random_q(radius);
    return d;
}

Vec3 random_unit() {
    std::normal_distribution<double> n(0.0, 1.0);
    Vec3 v(n(rng), n(rng), n(rng));
    while (v.norm() < 1e-3) v = Vec3(n(rng), n(rng), n(rng));
    return v.normalized();
}

// Strictly admissible random elastic triple.
ElasticParams random_elastic() {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double l1 = 0.1 + 1.9 * u(rng);
    const double l3 = (-l1 + 0.05 * l1) + (3.0 * l1 - 0.1 * l1) * u(rng) * 0.95;
    const double lo = -0.6 * l1 - 0.1 * l3;
    const double l2 = lo + 0.05 * std::abs(lo) + 2.0 * u(rng) + 1e-3;
    return ElasticParams(l1, l2, l3);
}

} // namespace

TEST_CASE("elastic parameter validation") {
    CHECK_THROWS_AS(ElasticParams(-1.0, 0.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(ElasticParams(1.0, 0.0, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(ElasticParams(1.0, 0.0, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(ElasticParams(1.0, -0.7, 0.0), std::invalid_argument);
    CHECK_NOTHROW(ElasticParams(1.0, 0.5, 0.5));
}

TEST_CASE("elastic density") {
    const ElasticParams p(1.0, 0.5, 0.5);
    CHECK(f_elastic(GradientSlot{}, p) == 0.0);

    const ElasticParams one_const(0.8, 0.0, 0.0);
    for (int t = 0; t < 20; ++t) {
        const GradientSlot d = random_slot();
        CHECK(std::abs(f_elastic(d, one_const) - 0.8 * d.norm2()) < 1e-13);
    }
    // brute-force index summation oracle
    for (int t = 0; t < 100; ++t) {
        const GradientSlot d = random_slot(2.0);
        const double got = f_elastic(d, p);
        const double want = ref::f_elastic_full(d, p);
        CHECK(std::abs(got - want) < 1e-12 * (1.0 + std::abs(want)));
    }
}

TEST_CASE("elastic gradient") {
    const ElasticParams p(1.0, 0.5, 0.5);
    CHECK(f_elastic_grad(GradientSlot{}, p).norm2() == 0.0);

    const ElasticParams one_const(1.3, 0.0, 0.0);
    for (int t = 0; t < 20; ++t) {
        const GradientSlot d = random_slot();
        const GradientSlot g = f_elastic_grad(d, one_const);
        for (int k = 0; k < 3; ++k)
            for (int m = 0; m < 5; ++m)
                CHECK(std::abs(g.d[k].c[m] - 2.0 * 1.3 * d.d[k].c[m]) < 1e-13);
    }
    // directional finite differences
    const double h = 1e-5;
    for (int t = 0; t < 20; ++t) {
        const GradientSlot d = random_slot();
        const GradientSlot e = random_slot();
        const GradientSlot g = f_elastic_grad(d, p);
        GradientSlot dp = d, dm = d;
        dp += h * e;
        dm += (-h) * e;
        const double fd = (f_elastic(dp, p) - f_elastic(dm, p)) / (2.0 * h);
        const double an = dot(g, e);
        CHECK(std::abs(fd - an) < 1e-6 * (1.0 + std::abs(an)));
    }
}

TEST_CASE("elastic coercivity over admissible parameters") {
    // 15x15 matrix of the quadratic form over the frozen basis, by polarization.
    for (int trial = 0; trial < 50; ++trial) {
        const ElasticParams p = random_elastic();
        Eigen::Matrix<double, 15, 15> a;
        auto basis_slot = [](int idx) {
            GradientSlot d;
            d.d[idx / 5].c[idx % 5] = 1.0;
            return d;
        };
        for (int i = 0; i < 15; ++i)
            for (int j = 0; j < 15; ++j) {
                GradientSlot sum = basis_slot(i);
                sum += basis_slot(j);
                a(i, j) = 0.5 * (f_elastic(sum, p) - f_elastic(basis_slot(i), p) -
                                 f_elastic(basis_slot(j), p));
            }
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 15, 15>> es(a);
        CHECK(es.eigenvalues().minCoeff() > 0.0);
    }
}

TEST_CASE("kappa normalization") {
    CHECK_THROWS_AS(kappa_of(1.0, 0.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(kappa_of(1.0, 0.0, -1.0), std::invalid_argument);
    CHECK(kappa_of(1.0, 0.0, 1.0) == 0.0);
    CHECK(std::abs(kappa_of(-1.0, 0.0, 1.0) - 0.25) < 1e-14);

    // Cross-check the uniaxial closed form by sampling plus local polish.
    const BulkParams p(-1.0, 1.0, 1.0);
    double best = 1e300;
    QTensor best_q;
    for (int t = 0; t < 200000; ++t) {
        const QTensor q = random_q(2.0);
        const double v = p.a * q.norm2() -
                         p.b * (q.matrix() * q.matrix() * q.matrix()).trace() +
                         p.c * q.norm2() * q.norm2();
        if (v < best) {
            best = v;
            best_q = q;
        }
    }
    // polish the best sample by gradient descent
    QTensor q = best_q;
    double f = best;
    double step = 0.1;
    for (int it = 0; it < 2000; ++it) {
        QTensor g = f_bulk_grad(q, p); // includes d kappa = 0
        QTensor trial = q - step * g;
        const double ft = p.a * trial.norm2() -
                          p.b * (trial.matrix() * trial.matrix() * trial.matrix()).trace() +
                          p.c * trial.norm2() * trial.norm2();
        if (ft < f) {
            q = trial;
            f = ft;
            step *= 1.3;
        } else {
            step *= 0.5;
            if (step < 1e-14) break;
        }
    }
    CHECK(std::abs(-f - p.kappa) < 1e-6);
}

TEST_CASE("bulk density and gradient") {
    // a >= 0, b = 0: kappa = 0 and value at 0 is 0
    const BulkParams convex(1.0, 0.0, 1.0);
    CHECK(convex.kappa == 0.0);
    CHECK(f_bulk(QTensor{}, convex) == 0.0);

    // a = -1, b = 0, c = 1: minimum at tr(Q^2) = 1/2, kappa = 1/4
    const BulkParams dw(-1.0, 0.0, 1.0);
    CHECK(std::abs(dw.kappa - 0.25) < 1e-14);
    QTensor q;
    q.c = {std::sqrt(0.5), 0.0, 0.0, 0.0, 0.0};
    CHECK(std::abs(f_bulk(q, dw)) < 1e-14);

    // a = -1, b = 1, c = 1: value at the minimising uniaxial state is 0
    {
        const BulkParams p(-1.0, 1.0, 1.0);
        // minimising s from the stationary quadratic (16c/9)s^2-(2b/3)s+(4a/3)=0
        const double qa = 16.0 / 9.0, qb = -2.0 / 3.0, qc = -4.0 / 3.0;
        const double s1 = (-qb + std::sqrt(qb * qb - 4 * qa * qc)) / (2 * qa);
        const Vec3 n = random_unit();
        const Mat3 m = s1 * (n * n.transpose() - Mat3::Identity() / 3.0);
        CHECK(std::abs(f_bulk(QTensor::from_matrix(m), p)) < 1e-9);
    }

    // normalization: f_bulk >= -1e-9 over a big sample
    const BulkParams p(-1.0, 1.0, 1.0);
    for (int t = 0; t < 1000000; ++t) {
        const QTensor s = random_q(5.0 / std::sqrt(5.0));
        CHECK(f_bulk(s, p) >= -1e-9);
    }

    CHECK(f_bulk_grad(QTensor{}, p).norm() == 0.0);
    // b = 0 closed form
    for (int t = 0; t < 20; ++t) {
        const QTensor s = random_q();
        const QTensor g = f_bulk_grad(s, dw);
        const double coef = 2.0 * dw.a + 4.0 * dw.c * s.norm2();
        for (int m = 0; m < 5; ++m) CHECK(std::abs(g.c[m] - coef * s.c[m]) < 1e-13);
    }
    // finite differences
    const double h = 1e-5;
    for (int t = 0; t < 50; ++t) {
        const QTensor s = random_q(1.5);
        const QTensor dir = random_q();
        const QTensor g = f_bulk_grad(s, p);
        const double fd = (f_bulk(s + h * dir, p) - f_bulk(s - h * dir, p)) / (2.0 * h);
        CHECK(std::abs(fd - dot(g, dir)) < 1e-6 * (1.0 + std::abs(fd)));
    }
}

TEST_CASE("surface densities") {
    const SurfaceDensity rp = SurfaceDensity::rapini_papoular(1.7);
    for (int t = 0; t < 30; ++t) {
        const Vec3 nu = random_unit();
        // perfect anchoring
        CHECK(std::abs(f_surface(rp, q_nu(UnitVector(nu)), nu)) < 1e-13);
        // Q = 0
        CHECK(std::abs(f_surface(rp, QTensor{}, nu) - 2.0 / 3.0 * 1.7) < 1e-13);
        // nu parity
        const QTensor q = random_q();
        CHECK(f_surface(rp, q, nu) == f_surface(rp, q, Vec3(-nu)));
    }

    const SurfaceDensity sq = SurfaceDensity::spherical_quadratic(2.5);
    for (int t = 0; t < 30; ++t) {
        const Vec3 nu = random_unit();
        const QTensor qn = q_nu(UnitVector(nu));
        // Q_nu nu = (2/3) nu so nu . Q_nu^2 nu = 4/9
        CHECK(std::abs(f_surface(sq, qn, nu) - 2.5 / (4.0 * M_PI) * 4.0 / 9.0) < 1e-13);
        const QTensor q = random_q();
        CHECK(f_surface(sq, q, nu) == f_surface(sq, q, Vec3(-nu)));
    }

    // gradients against finite differences
    const double h = 1e-6;
    for (const SurfaceDensity& s : {rp, sq}) {
        for (int t = 0; t < 30; ++t) {
            const Vec3 nu = random_unit();
            const QTensor q = random_q(1.5);
            const QTensor dir = random_q();
            const QTensor g = f_surface_grad(s, q, nu);
            const double fd =
                (f_surface(s, q + h * dir, nu) - f_surface(s, q - h * dir, nu)) /
                (2.0 * h);
            CHECK(std::abs(fd - dot(g, dir)) < 1e-6 * (1.0 + std::abs(fd)));
        }
    }
}

TEST_CASE("growth contract of the anchoring density") {
    // |f(Q1,nu)-f(Q2,nu)| <= C (|Q1|^3+|Q2|^3+1)|Q1-Q2|, C fitted once and
    // stable across sample sizes. Pairs are drawn with magnitude uniform in
    // [0, 3] and half of them nearby, so the small-norm regime where the
    // ratio peaks is actually explored.
    const SurfaceDensity rp = SurfaceDensity::rapini_papoular(1.0);
    std::uniform_real_distribution<double> mag(0.0, 3.0);
    std::uniform_real_distribution<double> delta(0.0, 0.3);
    auto draw = [&]() {
        QTensor q = random_q();
        const double n = q.norm();
        return n > 1e-12 ? (mag(rng) / n) * q : q;
    };
    auto fitted = [&](int samples) {
        double c = 0.0;
        for (int t = 0; t < samples; ++t) {
            const Vec3 nu = random_unit();
            const QTensor a = draw();
            QTensor b = draw();
            if (t % 2 == 0) {
                QTensor step = random_q();
                b = a + (delta(rng) / std::max(step.norm(), 1e-12)) * step;
            }
            const double num = std::abs(f_surface(rp, a, nu) - f_surface(rp, b, nu));
            const double den =
                (std::pow(a.norm(), 3) + std::pow(b.norm(), 3) + 1.0) * (a - b).norm();
            if (den > 1e-12) c = std::max(c, num / den);
        }
        return c;
    };
    const double c1 = fitted(4000);
    const double c2 = fitted(16000);
    const double c3 = fitted(64000);
    CHECK(c1 > 0.0);
    CHECK(c2 <= 1.25 * c1 + 1e-12);
    CHECK(c3 <= 1.25 * c1 + 1e-12);
}

TEST_CASE("custom density plumbing") {
    SurfaceDensity::CustomFns fns;
    fns.name = "test";
    fns.value = [](const QTensor& q, const Vec3&) { return q.norm2(); };
    fns.bounded_below = true;
    const SurfaceDensity s = SurfaceDensity::custom_density(fns);
    CHECK(s.has_gradient() == false);
    CHECK_THROWS_AS((void)f_surface_grad(s, QTensor{}, Vec3::UnitX()),
                    std::runtime_error);
}
