#include "nemhom/qtensor.hpp"

namespace nemhom {

namespace {
const double kInvSqrt6 = 1.0 / std::sqrt(6.0);
const double kInvSqrt2 = 1.0 / std::sqrt(2.0);
} // namespace

Mat3 s0_basis_matrix(int m) {
    Mat3 e = Mat3::Zero();
    switch (m) {
    case 0:
        e(0, 0) = -kInvSqrt6;
        e(1, 1) = -kInvSqrt6;
        e(2, 2) = 2.0 * kInvSqrt6;
        break;
    case 1:
        e(0, 0) = kInvSqrt2;
        e(1, 1) = -kInvSqrt2;
        break;
    case 2:
        e(0, 1) = e(1, 0) = kInvSqrt2;
        break;
    case 3:
        e(0, 2) = e(2, 0) = kInvSqrt2;
        break;
    case 4:
        e(1, 2) = e(2, 1) = kInvSqrt2;
        break;
    default:
        throw std::out_of_range("s0_basis_matrix: index must be in 0..4");
    }
    return e;
}

QTensor QTensor::from_matrix(const Mat3& m) {
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12)
        throw std::invalid_argument("QTensor::from_matrix: matrix is not symmetric");
    if (std::abs(m.trace()) > 1e-12 * (1.0 + m.cwiseAbs().maxCoeff()))
        throw std::invalid_argument("QTensor::from_matrix: matrix is not traceless");
    QTensor q;
    // c_m = tr(M E_m); expanded for the frozen basis.
    q.c[0] = (-m(0, 0) - m(1, 1) + 2.0 * m(2, 2)) * kInvSqrt6;
    q.c[1] = (m(0, 0) - m(1, 1)) * kInvSqrt2;
    q.c[2] = 2.0 * m(0, 1) * kInvSqrt2;
    q.c[3] = 2.0 * m(0, 2) * kInvSqrt2;
    q.c[4] = 2.0 * m(1, 2) * kInvSqrt2;
    return q;
}

Mat3 QTensor::matrix() const {
    Mat3 m;
    const double d0 = c[0] * kInvSqrt6;
    m(0, 0) = -d0 + c[1] * kInvSqrt2;
    m(1, 1) = -d0 - c[1] * kInvSqrt2;
    m(2, 2) = 2.0 * d0;
    m(0, 1) = m(1, 0) = c[2] * kInvSqrt2;
    m(0, 2) = m(2, 0) = c[3] * kInvSqrt2;
    m(1, 2) = m(2, 1) = c[4] * kInvSqrt2;
    return m;
}

SymMatrix SymMatrix::from_matrix(const Mat3& m) {
    if ((m - m.transpose()).cwiseAbs().maxCoeff() != 0.0 &&
        (m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12)
        throw std::invalid_argument("SymMatrix::from_matrix: matrix is not symmetric");
    SymMatrix s;
    s.c = {m(0, 0), m(1, 1), m(2, 2), 0.5 * (m(0, 1) + m(1, 0)),
           0.5 * (m(0, 2) + m(2, 0)), 0.5 * (m(1, 2) + m(2, 1))};
    return s;
}

SymMatrix SymMatrix::identity() {
    SymMatrix s;
    s.c = {1.0, 1.0, 1.0, 0.0, 0.0, 0.0};
    return s;
}

Mat3 SymMatrix::matrix() const {
    Mat3 m;
    m(0, 0) = c[0];
    m(1, 1) = c[1];
    m(2, 2) = c[2];
    m(0, 1) = m(1, 0) = c[3];
    m(0, 2) = m(2, 0) = c[4];
    m(1, 2) = m(2, 1) = c[5];
    return m;
}

QTensor q_nu(const UnitVector& nu) {
    const Vec3& n = nu.v;
    Mat3 m = n * n.transpose();
    m(0, 0) -= 1.0 / 3.0;
    m(1, 1) -= 1.0 / 3.0;
    m(2, 2) -= 1.0 / 3.0;
    return QTensor::from_matrix(m);
}

double dot(const QTensor& a, const QTensor& b) {
    double s = 0.0;
    for (int i = 0; i < 5; ++i) s += a.c[i] * b.c[i];
    return s;
}

double dot(const SymMatrix& a, const SymMatrix& b) {
    // tr(AB) for symmetric matrices: diagonal products + twice the off-diagonals.
    return a.c[0] * b.c[0] + a.c[1] * b.c[1] + a.c[2] * b.c[2] +
           2.0 * (a.c[3] * b.c[3] + a.c[4] * b.c[4] + a.c[5] * b.c[5]);
}

double dot(const QTensor& a, const SymMatrix& b) {
    return (a.matrix() * b.matrix()).trace();
}

QTensor deviatoric(const SymMatrix& p) { return deviatoric(p.matrix()); }

QTensor deviatoric(const Mat3& m) {
    Mat3 d = 0.5 * (m + m.transpose());
    const double t = d.trace() / 3.0;
    d(0, 0) -= t;
    d(1, 1) -= t;
    d(2, 2) -= t;
    return QTensor::from_matrix(d);
}

} // namespace nemhom
