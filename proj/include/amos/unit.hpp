// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace amos {

/// Gate nonlinearities understood by the toolkit. `identity` is only
/// meaningful inside ANN graphs (it lowers to pure routing); the other four
/// name both reference activations and trainable unit kinds.
enum class GateKind { relu, sigmoid, swish, mult, identity };

GateKind gate_kind_from_string(const std::string &s);
std::string to_string(GateKind kind);

/// Parameter set of one spiking subcircuit of K threshold gates that
/// approximates a scalar (arity 1) or two-input (arity 2) gate function.
///
/// Gate i (1-based in the math, 0-based here) computes
///   z_i = step(c_i*x [+ c2_i*x2] - sum_{j<i} h(i,j)*z_j - T_i)
/// and the unit output is y = sum_i d_i*z_i. The lateral weights h are
/// stored as a row-major strictly-lower-triangular list of length K(K-1)/2.
struct AmosUnitParams {
	int arity = 1;
	int K = 0;
	std::vector<double> c;
	std::vector<double> c2;  // present iff arity == 2
	std::vector<double> d;
	std::vector<double> h;
	std::vector<double> T;
	GateKind kind = GateKind::relu;
	/// Sampling interval per input, when known (set by training or by the
	/// closed-form constructors). May be empty.
	std::vector<std::array<double, 2>> domain;

	static int h_index(int i, int j);  // i > j, both 0-based
	double h_at(int i, int j) const { return h[h_index(i, j)]; }
	double &h_at(int i, int j) { return h[h_index(i, j)]; }

	/// Throws std::invalid_argument if shapes or finiteness are violated.
	void validate() const;
};

/// Result of evaluating one unit on one input.
struct UnitEvaluation {
	double y = 0.0;
	std::vector<std::uint8_t> z;
	int spike_count = 0;
};

/// Unit step with step(0) = 1. Rejects non-finite input.
double heaviside(double v);

/// Reference (sequential, deterministic) semantics of a unit. This is the
/// model the clocked simulator is checked against.
UnitEvaluation evaluate_unit(const AmosUnitParams &params, double x,
                             std::optional<double> x2 = std::nullopt);

namespace detail {
/// evaluate_unit without validation or allocation, for grid sweeps.
/// z_scratch is resized to K.
double evaluate_unit_value(const AmosUnitParams &params, double x, double x2,
                           std::vector<std::uint8_t> &z_scratch);
}  // namespace detail

/// Closed-form ReLU unit: c_i = 1, T_i = d_i = alpha*2^-i,
/// h(i,j) = alpha*2^-j. Output equals
///   alpha*2^-K * floor(clamp(x, 0, alpha*(1 - 2^-K)) / (alpha*2^-K)),
/// so 0 <= relu(x) - y <= alpha*2^-K for all x <= alpha.
AmosUnitParams build_relu_unit(int K, double alpha);

/// Number of free parameters of a unit: (2 + arity)*K + K*(K-1)/2
/// (c and optionally c2, d, T per gate, plus the lateral triangle).
long long parameter_count(int arity, int K);

/// Exact floating-point target value for a named gate function.
double reference_activation(GateKind kind, double x,
                            std::optional<double> x2 = std::nullopt);

double relu(double x);
double sigmoid(double x);
double swish(double x);

}  // namespace amos
