// Copyright 2026 The reupload Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/**
 * @file circuit.hpp
 * Exact single-qubit evolution for data re-uploading classifiers.
 *
 * A circuit of L layers starts in |0> and applies, per layer, R_y(phi_y)
 * followed by R_z(phi_z). The two angles are linear in the layer's four
 * parameters and the two data coordinates; the ansatz fixes which products
 * appear. Gate conventions are R_y(a) = exp(-i a Y / 2) and
 * R_z(a) = exp(-i a Z / 2). Angles are never reduced modulo 2 pi.
 */
#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace reup {

using complex_t = std::complex<double>;

/// Flat parameter vector theta, four entries per layer.
using ParameterVector = std::vector<double>;

inline constexpr std::size_t kParamsPerLayer = 4;

struct Point2 {
    double x0{0.0};
    double x1{0.0};
    friend bool operator==(const Point2 &, const Point2 &) = default;
};

/// The four linear kernels mapping (theta, x) to the two gate angles of a layer.
enum class Ansatz { A2, B2, C2, D2 };

inline constexpr std::array<Ansatz, 4> kAllAnsatze{Ansatz::A2, Ansatz::B2, Ansatz::C2,
                                                   Ansatz::D2};

constexpr std::string_view to_string(Ansatz a) noexcept {
    switch (a) {
    case Ansatz::A2:
        return "2A";
    case Ansatz::B2:
        return "2B";
    case Ansatz::C2:
        return "2C";
    case Ansatz::D2:
        return "2D";
    }
    return "?";
}

inline Ansatz parse_ansatz(std::string_view s) {
    for (const auto a : kAllAnsatze) {
        if (s == to_string(a)) {
            return a;
        }
    }
    throw std::invalid_argument("unknown ansatz '" + std::string(s) +
                                "' (expected 2A, 2B, 2C or 2D)");
}

struct CircuitSpec {
    Ansatz ansatz{Ansatz::C2};
    std::size_t layers{4};

    [[nodiscard]] std::size_t parameter_count() const noexcept { return kParamsPerLayer * layers; }
    [[nodiscard]] std::size_t gate_count() const noexcept { return 2 * layers; }

    void validate() const {
        if (layers < 1) {
            throw std::invalid_argument("circuit needs at least one layer");
        }
    }

    /// Throws if theta does not have 4 * layers entries.
    void check_parameters(std::span<const double> theta) const {
        if (theta.size() != parameter_count()) {
            throw std::invalid_argument("parameter vector has " + std::to_string(theta.size()) +
                                        " entries, circuit with " + std::to_string(layers) +
                                        " layers needs " + std::to_string(parameter_count()));
        }
    }

    friend bool operator==(const CircuitSpec &, const CircuitSpec &) = default;
};

struct QubitState {
    complex_t alpha{1.0, 0.0};
    complex_t beta{0.0, 0.0};

    [[nodiscard]] double p0() const noexcept { return std::norm(alpha); }
    [[nodiscard]] double p1() const noexcept { return std::norm(beta); }
    [[nodiscard]] double norm2() const noexcept { return p0() + p1(); }
};

struct Probabilities {
    double p0{1.0};
    double p1{0.0};

    [[nodiscard]] double operator[](int label) const noexcept { return label == 0 ? p0 : p1; }
};

inline void check_label(int y) {
    if (y != 0 && y != 1) {
        throw std::invalid_argument("label must be 0 or 1, got " + std::to_string(y));
    }
}

inline QubitState rotation_y(const QubitState &s, double angle) noexcept {
    const double c = std::cos(0.5 * angle);
    const double sn = std::sin(0.5 * angle);
    return {c * s.alpha - sn * s.beta, sn * s.alpha + c * s.beta};
}

inline QubitState rotation_z(const QubitState &s, double angle) noexcept {
    const complex_t phase = std::polar(1.0, -0.5 * angle);
    return {phase * s.alpha, std::conj(phase) * s.beta};
}

/// Gate angles of one layer: R_y(phi_y) is applied first, then R_z(phi_z).
struct GateAngles {
    double phi_y{0.0};
    double phi_z{0.0};
};

inline GateAngles layer_args(Ansatz ansatz, std::span<const double, 4> t, Point2 x) noexcept {
    switch (ansatz) {
    case Ansatz::A2:
        return {t[0] * x.x0 + t[1] * x.x1 + t[2], t[3]};
    case Ansatz::B2:
        return {t[0] * x.x0 + t[1], t[2] * x.x1 + t[3]};
    case Ansatz::C2:
        return {t[0] * x.x0 + t[1] * x.x1, t[2] * x.x0 + t[3] * x.x1};
    case Ansatz::D2:
        return {t[0], t[1] * x.x0 + t[2] * x.x1 + t[3]};
    }
    return {};
}

/// d(phi_y)/d(theta_k) and d(phi_z)/d(theta_k) for the four layer parameters.
struct LayerJacobian {
    std::array<double, 4> dy{};
    std::array<double, 4> dz{};
};

inline LayerJacobian layer_jacobian(Ansatz ansatz, Point2 x) noexcept {
    switch (ansatz) {
    case Ansatz::A2:
        return {{x.x0, x.x1, 1.0, 0.0}, {0.0, 0.0, 0.0, 1.0}};
    case Ansatz::B2:
        return {{x.x0, 1.0, 0.0, 0.0}, {0.0, 0.0, x.x1, 1.0}};
    case Ansatz::C2:
        return {{x.x0, x.x1, 0.0, 0.0}, {0.0, 0.0, x.x0, x.x1}};
    case Ansatz::D2:
        return {{1.0, 0.0, 0.0, 0.0}, {0.0, x.x0, x.x1, 1.0}};
    }
    return {};
}

inline std::vector<GateAngles> gate_angles(const CircuitSpec &spec, std::span<const double> theta,
                                           Point2 x) {
    spec.check_parameters(theta);
    std::vector<GateAngles> angles(spec.layers);
    for (std::size_t l = 0; l < spec.layers; ++l) {
        angles[l] = layer_args(spec.ansatz, theta.subspan(kParamsPerLayer * l).first<4>(), x);
    }
    return angles;
}

inline QubitState run_angles(std::span<const GateAngles> angles) noexcept {
    QubitState s;
    for (const auto &a : angles) {
        s = rotation_z(rotation_y(s, a.phi_y), a.phi_z);
    }
    return s;
}

inline Probabilities evaluate_angles(std::span<const GateAngles> angles) noexcept {
    const auto s = run_angles(angles);
    // Renormalize away the last-ulp drift so p0 + p1 == 1 to rounding.
    const double n = s.norm2();
    return {s.p0() / n, s.p1() / n};
}

inline Probabilities evaluate_circuit(const CircuitSpec &spec, std::span<const double> theta,
                                      Point2 x) {
    const auto angles = gate_angles(spec, theta, x);
    return evaluate_angles(angles);
}

/// M(theta, x, y): probability of projecting onto the label pole |y>.
inline double measure_label(const CircuitSpec &spec, std::span<const double> theta, Point2 x,
                            int y) {
    check_label(y);
    return evaluate_circuit(spec, theta, x)[y];
}

/// Label 1 iff p1 > 0.5; an exact tie goes to 0.
inline int classify(const CircuitSpec &spec, std::span<const double> theta, Point2 x) {
    return evaluate_circuit(spec, theta, x).p1 > 0.5 ? 1 : 0;
}

namespace detail {

using Mat2 = std::array<complex_t, 4>; // row-major
using Row2 = std::array<complex_t, 2>;

inline Mat2 ry_matrix(double a) noexcept {
    const double c = std::cos(0.5 * a);
    const double s = std::sin(0.5 * a);
    return {c, -s, s, c};
}

inline Mat2 ry_derivative(double a) noexcept {
    const double c = std::cos(0.5 * a);
    const double s = std::sin(0.5 * a);
    return {-0.5 * s, -0.5 * c, 0.5 * c, -0.5 * s};
}

inline Mat2 rz_matrix(double a) noexcept {
    const complex_t e = std::polar(1.0, -0.5 * a);
    return {e, 0.0, 0.0, std::conj(e)};
}

inline Mat2 rz_derivative(double a) noexcept {
    const complex_t e = std::polar(1.0, -0.5 * a);
    const complex_t i{0.0, 1.0};
    return {-0.5 * i * e, 0.0, 0.0, 0.5 * i * std::conj(e)};
}

inline std::array<complex_t, 2> apply(const Mat2 &m, const std::array<complex_t, 2> &v) noexcept {
    return {m[0] * v[0] + m[1] * v[1], m[2] * v[0] + m[3] * v[1]};
}

inline Row2 left_apply(const Row2 &r, const Mat2 &m) noexcept {
    return {r[0] * m[0] + r[1] * m[2], r[0] * m[1] + r[1] * m[3]};
}

inline complex_t contract(const Row2 &r, const std::array<complex_t, 2> &v) noexcept {
    return r[0] * v[0] + r[1] * v[1];
}

} // namespace detail

/**
 * dM/dphi for every gate angle, ordered (phi_y0, phi_z0, phi_y1, ...).
 * Exact: differentiates the gate product with forward states and backward
 * label bras.
 */
inline std::vector<double> angle_gradient(std::span<const GateAngles> angles, int y) {
    check_label(y);
    const std::size_t gates = 2 * angles.size();
    std::vector<detail::Mat2> g(gates);
    std::vector<detail::Mat2> dg(gates);
    for (std::size_t l = 0; l < angles.size(); ++l) {
        g[2 * l] = detail::ry_matrix(angles[l].phi_y);
        dg[2 * l] = detail::ry_derivative(angles[l].phi_y);
        g[2 * l + 1] = detail::rz_matrix(angles[l].phi_z);
        dg[2 * l + 1] = detail::rz_derivative(angles[l].phi_z);
    }

    // forward[k] is the state before gate k
    std::vector<std::array<complex_t, 2>> forward(gates + 1);
    forward[0] = {1.0, 0.0};
    for (std::size_t k = 0; k < gates; ++k) {
        forward[k + 1] = detail::apply(g[k], forward[k]);
    }
    const complex_t amplitude = forward[gates][static_cast<std::size_t>(y)];

    std::vector<double> grad(gates);
    detail::Row2 bra = y == 0 ? detail::Row2{1.0, 0.0} : detail::Row2{0.0, 1.0};
    for (std::size_t k = gates; k-- > 0;) {
        const complex_t d = detail::contract(bra, detail::apply(dg[k], forward[k]));
        grad[k] = 2.0 * std::real(std::conj(amplitude) * d);
        bra = detail::left_apply(bra, g[k]);
    }
    return grad;
}

/// Same quantity by the two-term shift rule, exact for Pauli rotations.
inline std::vector<double> angle_gradient_shift(std::span<const GateAngles> angles, int y) {
    check_label(y);
    constexpr double shift = std::numbers::pi / 2.0;
    std::vector<GateAngles> work(angles.begin(), angles.end());
    std::vector<double> grad(2 * angles.size());
    for (std::size_t k = 0; k < grad.size(); ++k) {
        double &phi = (k % 2 == 0) ? work[k / 2].phi_y : work[k / 2].phi_z;
        const double saved = phi;
        phi = saved + shift;
        const double plus = evaluate_angles(work)[y];
        phi = saved - shift;
        const double minus = evaluate_angles(work)[y];
        phi = saved;
        grad[k] = 0.5 * (plus - minus);
    }
    return grad;
}

/// Chain rule from per-gate-angle derivatives to per-parameter derivatives.
inline std::vector<double> chain_to_parameters(const CircuitSpec &spec, Point2 x,
                                               std::span<const double> angle_grad) {
    if (angle_grad.size() != spec.gate_count()) {
        throw std::invalid_argument("angle gradient length does not match circuit");
    }
    const auto jac = layer_jacobian(spec.ansatz, x);
    std::vector<double> grad(spec.parameter_count());
    for (std::size_t l = 0; l < spec.layers; ++l) {
        for (std::size_t k = 0; k < kParamsPerLayer; ++k) {
            grad[kParamsPerLayer * l + k] =
                jac.dy[k] * angle_grad[2 * l] + jac.dz[k] * angle_grad[2 * l + 1];
        }
    }
    return grad;
}

/// dM(theta, x, y)/dtheta_j, exact.
inline std::vector<double> analytic_gradient(const CircuitSpec &spec, std::span<const double> theta,
                                             Point2 x, int y) {
    const auto angles = gate_angles(spec, theta, x);
    return chain_to_parameters(spec, x, angle_gradient(angles, y));
}

} // namespace reup
