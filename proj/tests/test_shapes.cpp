#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include <Eigen/Dense>

#include "nemhom/quadrature.hpp"
#include "nemhom/shapes.hpp"

using namespace nemhom;

namespace {

double max_abs_diff(const SymMatrix& a, const SymMatrix& b) {
    return (a.matrix() - b.matrix()).cwiseAbs().maxCoeff();
}

// The wedge moment of the quarter-ball with constraints on axes (i, j) and
// signs (si, sj): pi/3 on the free axis diagonal, pi/3 + pi/2 on the
// constrained ones, si*sj*2/3 on the (i, j) off-diagonal.
SymMatrix analytic_wedge_moment(int i, int j, int si, int sj) {
    Mat3 m = (M_PI / 3.0) * Mat3::Identity();
    m(i, i) += M_PI / 2.0;
    m(j, j) += M_PI / 2.0;
    m(i, j) = m(j, i) = si * sj * 2.0 / 3.0;
    return SymMatrix::from_matrix(m);
}

} // namespace

TEST_CASE("gauss-legendre sanity") {
    // exact for polynomials of degree <= 2n-1
    for (int n : {2, 5, 16, 32}) {
        const GaussLegendre& gl = gauss_legendre(n);
        for (int deg = 0; deg < 2 * n; ++deg) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) s += gl.weights[i] * std::pow(gl.nodes[i], deg);
            const double exact = (deg % 2 == 0) ? 2.0 / (deg + 1) : 0.0;
            CHECK(std::abs(s - exact) < 1e-13);
        }
    }
}

TEST_CASE("ball area and moment") {
    const Shape ball = make_ball();
    const double area =
        quad_surface(ball, [](const Vec3&, const Vec3&) { return 1.0; }, 32);
    CHECK(std::abs(area - 4.0 * M_PI) < 1e-10);
    const SymMatrix m = moment_matrix(ball, 32);
    CHECK(max_abs_diff(m, SymMatrix::from_matrix(Mat3(4.0 * M_PI / 3.0 *
                                                      Mat3::Identity()))) < 1e-10);
    CHECK(ball.contains(Vec3(0.5, 0.5, 0.5)));
    CHECK(!ball.contains(Vec3(1.0, 0.5, 0.0)));
}

TEST_CASE("wedge area via two quadrature orders") {
    const Shape w = make_wedge(0, 1, +1, +1);
    const double a16 = quad_surface(w, [](const Vec3&, const Vec3&) { return 1.0; }, 16);
    const double a32 = quad_surface(w, [](const Vec3&, const Vec3&) { return 1.0; }, 32);
    CHECK(std::abs(a16 - 2.0 * M_PI) < 1e-9);
    CHECK(std::abs(a32 - 2.0 * M_PI) < 1e-10);
    CHECK(std::abs(a16 - a32) < 1e-9);
}

TEST_CASE("x1 x2 over the spherical patch of the (1,2) plus wedge") {
    const Shape w = make_wedge(0, 1, +1, +1);
    // patch 0 is the spherical quadrant
    const double v = quad_patch(
        w.patches[0], [](const Vec3& x, const Vec3&) { return x[0] * x[1]; }, 32);
    CHECK(std::abs(v - 2.0 / 3.0) < 1e-10);
}

TEST_CASE("wedge moments match the analytic matrices") {
    struct Case {
        int i, j, si, sj;
    };
    const Case cases[] = {{0, 1, 1, 1}, {0, 2, 1, 1}, {1, 2, 1, 1},
                          {0, 1, -1, 1}, {0, 2, -1, 1}, {1, 2, -1, 1}};
    for (const Case& c : cases) {
        const Shape w = make_wedge(c.i, c.j, c.si, c.sj);
        const SymMatrix m = moment_matrix(w, 32);
        CHECK(max_abs_diff(m, analytic_wedge_moment(c.i, c.j, c.si, c.sj)) < 1e-8);
        // trace of the moment equals the area
        CHECK(std::abs(m.trace() - w.area) < 1e-8);
    }
}

TEST_CASE("analytic m_k identities") {
    // M1 + M2 + M3 = 2 pi Id
    Mat3 sum = m_k(1).matrix() + m_k(2).matrix() + m_k(3).matrix();
    CHECK((sum - 2.0 * M_PI * Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(std::abs(m_k(4).matrix()(0, 1) - 2.0 / 3.0) < 1e-15);
    CHECK(std::abs(m_k(1).matrix()(0, 0) - M_PI / 3.0) < 1e-15);
    CHECK(std::abs(m_k(1).matrix()(1, 1) - (M_PI / 3.0 + M_PI / 2.0)) < 1e-15);
    CHECK_THROWS_AS((void)m_k(0), std::out_of_range);
    CHECK_THROWS_AS((void)m_k(7), std::out_of_range);

    // the six matrices are linearly independent: Gram determinant well away from 0
    Eigen::Matrix<double, 6, 6> gram;
    for (int a = 0; a < 6; ++a)
        for (int b = 0; b < 6; ++b)
            gram(a, b) = (m_k(a + 1).matrix() * m_k(b + 1).matrix()).trace();
    CHECK(std::abs(gram.determinant()) > 1e-6);
}

TEST_CASE("assemblies reproduce the analytic m_k by quadrature") {
    for (int k = 1; k <= 6; ++k) {
        const Shape a = make_assembly(k);
        const SymMatrix m = moment_matrix(a, 32);
        CHECK(max_abs_diff(m, m_k(k)) < 1e-8);
        CHECK(std::abs(a.area - 2.0 * M_PI) < 1e-8);
        CHECK(std::abs(m.trace() - a.area) < 1e-8);
        CHECK(int(a.components.size()) == (k <= 3 ? 2 : 1));
    }
}

TEST_CASE("quadrature order convergence on the catalogue") {
    for (const std::string& name : catalogue_names()) {
        const Shape s = shape_by_name(name);
        const SymMatrix m16 = moment_matrix(s, 16);
        const SymMatrix m32 = moment_matrix(s, 32);
        CHECK(max_abs_diff(m16, m32) < 1e-8);
        CHECK(std::abs(m32.trace() - s.area) < 1e-8);
    }
}

TEST_CASE("transforms") {
    const Shape ball = make_ball();
    const Shape same = transform(ball, Mat3::Identity(), 1.0, Vec3::Zero());
    CHECK(std::abs(same.area - ball.area) < 1e-12);
    CHECK(max_abs_diff(same.moment, ball.moment) < 1e-12);

    const Shape big = transform(ball, Mat3::Identity(), 2.0, Vec3::Zero());
    CHECK(std::abs(big.area - 16.0 * M_PI) < 1e-8);

    // rotation conjugates the moment
    std::mt19937_64 rng(5511);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int t = 0; t < 5; ++t) {
        const Vec3 axis = Vec3(u(rng), u(rng), u(rng)).normalized();
        const Mat3 r = Eigen::AngleAxisd(1.3 * u(rng), axis).toRotationMatrix();
        const Shape w = make_wedge(0, 1, +1, +1);
        const Shape rw = transform(w, r, 1.0, Vec3(u(rng), u(rng), u(rng)));
        const SymMatrix quad = moment_matrix(rw, 32);
        const Mat3 want = r * analytic_wedge_moment(0, 1, 1, 1).matrix() * r.transpose();
        CHECK((quad.matrix() - want).cwiseAbs().maxCoeff() < 1e-8);
        // stored moment was conjugated the same way (translation invariant)
        CHECK(max_abs_diff(rw.moment, SymMatrix::from_matrix(want)) < 1e-8);
    }

    Mat3 skew = Mat3::Identity();
    skew(0, 1) = 0.5;
    CHECK_THROWS_AS((void)transform(ball, skew, 1.0, Vec3::Zero()),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)transform(ball, Mat3::Identity(), 0.0, Vec3::Zero()),
                    std::invalid_argument);

    // contains follows the affine map
    const Shape shifted = transform(ball, Mat3::Identity(), 0.5, Vec3(2.0, 0.0, 0.0));
    CHECK(shifted.contains(Vec3(2.2, 0.0, 0.0)));
    CHECK(!shifted.contains(Vec3(0.0, 0.0, 0.0)));
}

TEST_CASE("catalogue names") {
    CHECK_THROWS_AS((void)shape_by_name("torus"), std::invalid_argument);
    CHECK_THROWS_AS((void)shape_by_name("wedge-21"), std::invalid_argument);
    // plus wedges accept both axis orders
    const Shape a = shape_by_name("wedge+12");
    const Shape b = shape_by_name("wedge+21");
    CHECK(max_abs_diff(a.moment, b.moment) < 1e-12);
    for (const std::string& n : catalogue_names()) CHECK_NOTHROW((void)shape_by_name(n));
}
