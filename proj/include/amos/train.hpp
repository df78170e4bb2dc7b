// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "amos/unit.hpp"

namespace amos {

/// The function a unit is trained to approximate: one of the named gate
/// functions, or an arbitrary callable (`tabulated`), together with the
/// closed sampling interval per input.
struct TargetFunction {
	int arity = 1;
	std::vector<std::array<double, 2>> domain;  // size == arity
	GateKind kind = GateKind::sigmoid;
	/// When set, overrides `kind`; called as tabulated(x, x2) with x2 = 0
	/// for arity-1 targets.
	std::function<double(double, double)> tabulated;

	double operator()(double x, double x2 = 0.0) const;
	void validate() const;

	/// Named target on its default domain: sigmoid [-8,8], swish [-6,6],
	/// relu [-8,8], mult [-1,1]^2.
	static TargetFunction named(GateKind kind);
	static TargetFunction named(GateKind kind,
	                            std::vector<std::array<double, 2>> domain);
};

struct TrainConfig {
	int K = 8;
	int sample_count = 4096;  // fresh samples drawn per epoch
	int epochs = 500;
	double learning_rate = 1e-3;
	int batch_size = 64;
	double gamma = 1.0;  // half-width of the triangle pseudo-derivative
	std::uint64_t rng_seed = 1;
	std::string init_scheme = "spread";  // "spread" or "ladder"

	void validate() const;
};

/// Per-kind presets that meet the toolkit's approximation-quality targets.
TrainConfig default_train_config(GateKind kind, int K);

struct TrainReport {
	AmosUnitParams params;
	std::vector<double> mse_history;  // mean training loss per epoch
	double final_grid_mse = 0.0;      // on the deterministic held-out grid
};

struct TrainSample {
	double x = 0.0;
	double x2 = 0.0;  // unused for arity 1
	double target = 0.0;
};

/// n i.i.d. uniform samples from the target's domain with exact target
/// values; deterministic for a fixed seed.
std::vector<TrainSample> sample_dataset(const TargetFunction &target, int n,
                                        std::uint64_t seed);

/// Triangle of unit area centered at 0: max(0, 1 - |v|/gamma) / gamma.
double pseudo_derivative(double v, double gamma);

/// Piecewise-quadratic antiderivative of the triangle: a soft step used as
/// the differentiable stand-in for the Heaviside when validating gradients
/// by finite differences.
double soft_step(double v, double gamma);

/// Loss and gradients of one unit on one sample.
///
/// The forward pass uses the exact Heaviside; the backward pass substitutes
/// the triangle pseudo-derivative at each gate and differentiates the lateral
/// recurrence exactly. With `surrogate_forward` the forward pass instead uses
/// soft_step, which makes the whole computation differentiable so that the
/// analytic gradients can be checked against central finite differences.
struct UnitGradients {
	double loss = 0.0;
	double y = 0.0;
	std::vector<double> c, c2, d, h, T;
};

UnitGradients unit_forward_backward(const AmosUnitParams &params, double x,
                                    std::optional<double> x2, double target,
                                    double gamma,
                                    bool surrogate_forward = false);

/// Minibatch training with adaptive-moment updates. Fully reproducible for a
/// fixed config; throws DivergenceError if the epoch loss goes non-finite.
TrainReport train_unit(const TargetFunction &target, const TrainConfig &cfg);

/// Mean squared error of the unit against the target over an evenly spaced
/// inclusive grid (product grid for arity 2).
double eval_mse(const AmosUnitParams &params, const TargetFunction &target,
                int grid_points_per_axis);

}  // namespace amos
