#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace nemhom {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Orthonormal basis of the symmetric traceless 3x3 matrices, frozen for the
// whole project (field dumps record it in their header):
//
//   E0 = diag(-1,-1, 2)/sqrt(6)
//   E1 = diag( 1,-1, 0)/sqrt(2)
//   E2 = (e1 e2^T + e2 e1^T)/sqrt(2)
//   E3 = (e1 e3^T + e3 e1^T)/sqrt(2)
//   E4 = (e2 e3^T + e3 e2^T)/sqrt(2)
//
// Orthonormal w.r.t. A.B = tr(AB), so |Q|^2 = tr(Q^2) = sum of squared
// coefficients.
Mat3 s0_basis_matrix(int m);

// Q-tensor: symmetric traceless 3x3 matrix stored by its five coefficients
// over the basis above. Tracelessness is structural, not numerical.
struct QTensor {
    std::array<double, 5> c{};

    QTensor() = default;
    explicit QTensor(const std::array<double, 5>& coeff) : c(coeff) {}

    static QTensor from_matrix(const Mat3& m);
    Mat3 matrix() const;

    double norm2() const {
        double s = 0.0;
        for (double v : c) s += v * v;
        return s;
    }
    double norm() const { return std::sqrt(norm2()); }

    QTensor& operator+=(const QTensor& o) {
        for (int i = 0; i < 5; ++i) c[i] += o.c[i];
        return *this;
    }
    QTensor& operator-=(const QTensor& o) {
        for (int i = 0; i < 5; ++i) c[i] -= o.c[i];
        return *this;
    }
    QTensor& operator*=(double s) {
        for (double& v : c) v *= s;
        return *this;
    }

    friend QTensor operator+(QTensor a, const QTensor& b) { return a += b; }
    friend QTensor operator-(QTensor a, const QTensor& b) { return a -= b; }
    friend QTensor operator*(QTensor a, double s) { return a *= s; }
    friend QTensor operator*(double s, QTensor a) { return a *= s; }
    friend QTensor operator-(QTensor a) { return a *= -1.0; }
};

// General symmetric 3x3 matrix (not necessarily traceless), six coefficients
// in the order (xx, yy, zz, xy, xz, yz).
struct SymMatrix {
    std::array<double, 6> c{};

    SymMatrix() = default;
    explicit SymMatrix(const std::array<double, 6>& coeff) : c(coeff) {}

    static SymMatrix from_matrix(const Mat3& m);
    static SymMatrix identity();
    Mat3 matrix() const;

    double trace() const { return c[0] + c[1] + c[2]; }

    SymMatrix& operator+=(const SymMatrix& o) {
        for (int i = 0; i < 6; ++i) c[i] += o.c[i];
        return *this;
    }
    SymMatrix& operator*=(double s) {
        for (double& v : c) v *= s;
        return *this;
    }
    friend SymMatrix operator+(SymMatrix a, const SymMatrix& b) { return a += b; }
    friend SymMatrix operator*(SymMatrix a, double s) { return a *= s; }
    friend SymMatrix operator*(double s, SymMatrix a) { return a *= s; }
};

// Unit vector; construction rejects inputs whose norm deviates from 1 by more
// than 1e-12.
struct UnitVector {
    Vec3 v;
    explicit UnitVector(const Vec3& u) : v(u) {
        if (std::abs(u.norm() - 1.0) > 1e-12)
            throw std::invalid_argument("UnitVector: input is not unit length");
    }
    static UnitVector normalized(const Vec3& u) { return UnitVector(Vec3(u / u.norm())); }
};

// nu (x) nu - Id/3
QTensor q_nu(const UnitVector& nu);

// Frobenius inner products tr(QP).
double dot(const QTensor& a, const QTensor& b);
double dot(const SymMatrix& a, const SymMatrix& b);
double dot(const QTensor& a, const SymMatrix& b);
inline double dot(const SymMatrix& a, const QTensor& b) { return dot(b, a); }

// P - tr(P)/3 Id, as a QTensor.
QTensor deviatoric(const SymMatrix& p);
QTensor deviatoric(const Mat3& m);

} // namespace nemhom
