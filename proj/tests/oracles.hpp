// SPDX-License-Identifier: MIT
//
// Reference values computed independently of the library: hyperbolic closed
// forms and matrix exponentials of the linear Hamiltonian systems (Eigen).
#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>

namespace oracle {

// kappa = 0, constant eta and lambda.
struct Hyperbolic {
    double T, x, eta, lambda;
    [[nodiscard]] double omega() const { return std::sqrt(lambda / eta); }
    [[nodiscard]] double A(double t) const { return 2.0 * std::sqrt(eta * lambda) / std::tanh(omega() * (T - t)); }
    [[nodiscard]] double X(double t) const { return x * std::sinh(omega() * (T - t)) / std::sinh(omega() * T); }
    [[nodiscard]] double xi(double t) const { return x * omega() * std::cosh(omega() * (T - t)) / std::sinh(omega() * T); }
    [[nodiscard]] double value() const { return 0.5 * A(0.0) * x * x; }
};

// Constant coefficients with permanent impact. (P, Q) solves
// P' = -Q/(2 eta), Q' = -2 lambda P - c Q backward from a terminal vector;
// the Riccati solution is Q/P.
struct Linear {
    double T, x, kappa, eta, lambda;

    [[nodiscard]] Eigen::Matrix2d generator(bool with_kappa) const {
        Eigen::Matrix2d G;
        G << 0.0, -1.0 / (2.0 * eta), -2.0 * lambda, with_kappa ? -kappa / (2.0 * eta) : 0.0;
        return G;
    }
    [[nodiscard]] Eigen::Vector2d backward(double t, Eigen::Vector2d terminal, bool with_kappa) const {
        const Eigen::Matrix2d E = (-generator(with_kappa) * (T - t)).exp();
        return E * terminal;
    }
    // Singular terminal value: terminal vector (0, 1).
    [[nodiscard]] double riccati(double t, bool with_kappa) const {
        const Eigen::Vector2d v = backward(t, {0.0, 1.0}, with_kappa);
        return v(1) / v(0);
    }
    [[nodiscard]] double penalized(double t, double n, bool with_kappa) const {
        const Eigen::Vector2d v = backward(t, {1.0, 2.0 * n}, with_kappa);
        return v(1) / v(0);
    }
    // Equilibrium field and aggregate inventory.
    [[nodiscard]] double mu(double t) const {
        const Eigen::Vector2d v0 = backward(0.0, {0.0, 1.0}, true), v = backward(t, {0.0, 1.0}, true);
        return x * v(1) / (2.0 * eta * v0(0));
    }
    [[nodiscard]] double X(double t) const {
        const Eigen::Vector2d v0 = backward(0.0, {0.0, 1.0}, true), v = backward(t, {0.0, 1.0}, true);
        return x * v(0) / v0(0);
    }
    // Penalized field mu^n and terminal inventory.
    [[nodiscard]] double mu_penalized(double t, double n) const {
        const Eigen::Vector2d v0 = backward(0.0, {1.0, 2.0 * n}, true), v = backward(t, {1.0, 2.0 * n}, true);
        return x * v(1) / (2.0 * eta * v0(0));
    }
    [[nodiscard]] double terminal_penalized(double n) const { return x / backward(0.0, {1.0, 2.0 * n}, true)(0); }
};

// Backward recursion for the penalized player problem against the
// penalized equilibrium field, on K uniform steps. The field is generated by
// the linear system (Xa, mu)' = (-mu, -(lambda/eta) Xa - c mu), so the
// player's problem is LQ in z = (x, Xa, mu): W(t, z) = z' P(t) z, and each
// step maps P_{k+1} to P_k through the exponential of the 6x6 Hamiltonian.
inline double dp_penalized_value(const Linear& m, double n, int K) {
    using Mat3 = Eigen::Matrix3d;
    using Mat6 = Eigen::Matrix<double, 6, 6>;
    const double c = m.kappa / (2.0 * m.eta);
    Mat3 F = Mat3::Zero();
    F(1, 2) = -1.0;
    F(2, 1) = -m.lambda / m.eta;
    F(2, 2) = -c;
    Eigen::Vector3d b(-1.0, 0.0, 0.0);
    Mat3 Q = Mat3::Zero();
    Q(0, 0) = m.lambda;
    Q(0, 2) = Q(2, 0) = 0.5 * m.kappa;
    Mat6 H;
    H << F, -(b * b.transpose()) / m.eta, -Q, -F.transpose();
    const double h = m.T / K;
    const Mat6 step = (-H * h).exp();

    Mat3 P = Mat3::Zero();
    P(0, 0) = n;
    for (int k = K - 1; k >= 0; --k) {
        Eigen::Matrix<double, 6, 3> VU;
        VU << Mat3::Identity(), P;
        const Eigen::Matrix<double, 6, 3> next = step * VU;
        const Mat3 V = next.topRows<3>(), U = next.bottomRows<3>();
        P = U * V.inverse();
        P = 0.5 * (P + P.transpose());
    }
    const Eigen::Vector3d z(m.x, m.x, m.mu_penalized(0.0, n));
    return z.dot(P * z);
}

}  // namespace oracle
