// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <random>

#include "amos/errors.hpp"
#include "amos/train.hpp"
#include "helpers.hpp"

using namespace amos;
using amos::testing::close_rel;

TEST_CASE("pseudo_derivative is the unit-area triangle")
{
	CHECK(pseudo_derivative(0.0, 1.0) == 1.0);
	CHECK(pseudo_derivative(1.0, 1.0) == 0.0);
	CHECK(pseudo_derivative(-1.0, 1.0) == 0.0);
	CHECK(pseudo_derivative(0.5, 1.0) == 0.5);
	CHECK(pseudo_derivative(2.0, 1.0) == 0.0);
	// Apex 1/gamma, base 2*gamma: area 1 for any width.
	for (double gamma : {0.25, 1.0, 3.0}) {
		CHECK(pseudo_derivative(0.0, gamma) == 1.0 / gamma);
		CHECK(pseudo_derivative(gamma, gamma) == 0.0);
		CHECK(pseudo_derivative(gamma / 2, gamma) ==
		      doctest::Approx(0.5 / gamma));
	}
	CHECK_THROWS_AS(pseudo_derivative(0.0, 0.0), std::invalid_argument);
	CHECK_THROWS_AS(pseudo_derivative(0.0, -1.0), std::invalid_argument);
}

TEST_CASE("soft_step is the triangle antiderivative")
{
	for (double gamma : {0.5, 1.0, 2.0}) {
		CHECK(soft_step(-gamma, gamma) == 0.0);
		CHECK(soft_step(0.0, gamma) == 0.5);
		CHECK(soft_step(gamma, gamma) == 1.0);
		CHECK(soft_step(-10.0 * gamma, gamma) == 0.0);
		CHECK(soft_step(10.0 * gamma, gamma) == 1.0);
		// d/dv soft_step == pseudo_derivative away from the kinks.
		std::mt19937_64 rng(3);
		std::uniform_real_distribution<double> uv(-2.0 * gamma, 2.0 * gamma);
		for (int i = 0; i < 50; ++i) {
			const double v = uv(rng);
			if (std::abs(v) < 1e-4 || std::abs(std::abs(v) - gamma) < 1e-4) {
				continue;
			}
			const double eps = 1e-7 * gamma;
			const double fd =
			    (soft_step(v + eps, gamma) - soft_step(v - eps, gamma)) /
			    (2 * eps);
			CHECK(close_rel(fd, pseudo_derivative(v, gamma), 1e-4));
		}
	}
}

TEST_CASE("sample_dataset is deterministic, in-domain and exact")
{
	const auto target = TargetFunction::named(GateKind::sigmoid);
	const auto a = sample_dataset(target, 100, 42);
	const auto b = sample_dataset(target, 100, 42);
	REQUIRE(a.size() == 100);
	for (std::size_t i = 0; i < a.size(); ++i) {
		CHECK(a[i].x == b[i].x);
		CHECK(a[i].target == b[i].target);
		CHECK(a[i].x >= -8.0);
		CHECK(a[i].x <= 8.0);
		CHECK(a[i].target == sigmoid(a[i].x));
		CHECK(a[i].target > 0.0);
		CHECK(a[i].target < 1.0);
	}
	const auto c = sample_dataset(target, 100, 43);
	CHECK(c[0].x != a[0].x);

	const auto mult = TargetFunction::named(GateKind::mult);
	for (const auto &s : sample_dataset(mult, 50, 7)) {
		CHECK(s.target == s.x * s.x2);
		CHECK(std::abs(s.x) <= 1.0);
		CHECK(std::abs(s.x2) <= 1.0);
	}

	CHECK_THROWS_AS(sample_dataset(target, 0, 1), std::invalid_argument);
}

TEST_CASE("gradients vanish outside the pseudo-derivative triangle")
{
	// Closed-form relu unit at a deeply negative input: no spikes and every
	// pre-activation far below -gamma.
	const auto p = build_relu_unit(4, 1.0);
	const auto g = unit_forward_backward(p, -50.0, std::nullopt, 0.3, 0.5);
	CHECK(g.y == 0.0);
	CHECK(g.loss == doctest::Approx(0.09));
	for (int i = 0; i < 4; ++i) {
		CHECK(g.c[i] == 0.0);
		CHECK(g.T[i] == 0.0);
		CHECK(g.d[i] == 0.0);
	}
	for (double h : g.h) {
		CHECK(h == 0.0);
	}
}

TEST_CASE("readout gradient is 2(y - target) * z")
{
	std::mt19937_64 rng(5);
	std::uniform_real_distribution<double> ux(-2.0, 2.0);
	for (int trial = 0; trial < 30; ++trial) {
		const auto p = amos::testing::random_unit(5, 1, GateKind::swish, rng());
		const double x = ux(rng);
		const double t = ux(rng);
		const auto ev = evaluate_unit(p, x);
		const auto g = unit_forward_backward(p, x, std::nullopt, t, 1.0);
		CHECK(g.y == ev.y);
		CHECK(g.loss == (ev.y - t) * (ev.y - t));
		for (int i = 0; i < p.K; ++i) {
			CHECK(g.d[i] == 2.0 * (ev.y - t) * ev.z[i]);
		}
	}
}

namespace {

/// Central finite difference of the surrogate (soft-forward) loss with
/// respect to one parameter slot.
template <typename Getter>
double fd_component(AmosUnitParams p, Getter get, double x,
                    std::optional<double> x2, double target, double gamma)
{
	const double eps = 1e-6;
	double &slot = get(p);
	const double orig = slot;
	slot = orig + eps;
	const double up = unit_forward_backward(p, x, x2, target, gamma, true).loss;
	slot = orig - eps;
	const double down =
	    unit_forward_backward(p, x, x2, target, gamma, true).loss;
	slot = orig;
	return (up - down) / (2 * eps);
}

bool soft_instance_is_smooth(const AmosUnitParams &p, double x,
                             std::optional<double> x2, double gamma)
{
	// Reject samples whose soft pre-activations sit on a kink of the
	// triangle, where a central difference straddles the non-smooth point.
	std::vector<double> z(p.K);
	for (int i = 0; i < p.K; ++i) {
		double v = p.c[i] * x;
		if (p.arity == 2) {
			v += p.c2[i] * *x2;
		}
		for (int j = 0; j < i; ++j) {
			v -= p.h[i * (i - 1) / 2 + j] * z[j];
		}
		v -= p.T[i];
		if (std::abs(v) < 1e-3 || std::abs(std::abs(v) - gamma) < 1e-3) {
			return false;
		}
		z[i] = soft_step(v, gamma);
	}
	return true;
}

}  // namespace

TEST_CASE("analytic gradients match finite differences of the surrogate loss")
{
	std::mt19937_64 rng(2024);
	std::uniform_real_distribution<double> ux(-2.0, 2.0);
	int checked = 0;
	while (checked < 25) {
		const int K = 1 + static_cast<int>(rng() % 5);
		const int arity = 1 + static_cast<int>(rng() % 2);
		const auto p = amos::testing::random_unit(
		    K, arity, arity == 2 ? GateKind::mult : GateKind::sigmoid, rng());
		const double x = ux(rng);
		const std::optional<double> x2 =
		    arity == 2 ? std::optional<double>(ux(rng)) : std::nullopt;
		const double target = ux(rng);
		const double gamma = 1.0;
		if (!soft_instance_is_smooth(p, x, x2, gamma)) {
			continue;
		}
		const auto g = unit_forward_backward(p, x, x2, target, gamma, true);
		for (int i = 0; i < K; ++i) {
			CHECK(close_rel(g.c[i],
			                fd_component(
			                    p,
			                    [i](AmosUnitParams &q) -> double & {
				                    return q.c[i];
			                    },
			                    x, x2, target, gamma),
			                1e-5));
			CHECK(close_rel(g.d[i],
			                fd_component(
			                    p,
			                    [i](AmosUnitParams &q) -> double & {
				                    return q.d[i];
			                    },
			                    x, x2, target, gamma),
			                1e-5));
			CHECK(close_rel(g.T[i],
			                fd_component(
			                    p,
			                    [i](AmosUnitParams &q) -> double & {
				                    return q.T[i];
			                    },
			                    x, x2, target, gamma),
			                1e-5));
			if (arity == 2) {
				CHECK(close_rel(g.c2[i],
				                fd_component(
				                    p,
				                    [i](AmosUnitParams &q) -> double & {
					                    return q.c2[i];
				                    },
				                    x, x2, target, gamma),
				                1e-5));
			}
		}
		for (std::size_t k = 0; k < p.h.size(); ++k) {
			CHECK(close_rel(g.h[k],
			                fd_component(
			                    p,
			                    [k](AmosUnitParams &q) -> double & {
				                    return q.h[k];
			                    },
			                    x, x2, target, gamma),
			                1e-5));
		}
		checked += 1;
	}
}

TEST_CASE("train_unit is bit-deterministic for a fixed config")
{
	auto target = TargetFunction::named(GateKind::sigmoid);
	TrainConfig cfg;
	cfg.K = 4;
	cfg.epochs = 3;
	cfg.sample_count = 64;
	cfg.batch_size = 16;
	cfg.rng_seed = 123;
	const auto a = train_unit(target, cfg);
	const auto b = train_unit(target, cfg);
	CHECK(a.params.c == b.params.c);
	CHECK(a.params.d == b.params.d);
	CHECK(a.params.h == b.params.h);
	CHECK(a.params.T == b.params.T);
	CHECK(a.mse_history == b.mse_history);
	CHECK(a.final_grid_mse == b.final_grid_mse);
	CHECK(a.mse_history.size() == 3);
	for (double m : a.mse_history) {
		CHECK(std::isfinite(m));
	}
	// Training never changes the unit shape.
	CHECK(a.params.K == 4);
	CHECK(a.params.arity == 1);
	CHECK(parameter_count(a.params.arity, a.params.K) ==
	      static_cast<long long>(a.params.c.size() + a.params.d.size() +
	                             a.params.h.size() + a.params.T.size()));
}

TEST_CASE("training reports divergence with the epoch index")
{
	TargetFunction target;
	target.arity = 1;
	target.domain = {{-1.0, 1.0}};
	target.tabulated = [](double, double) { return 1e200; };
	TrainConfig cfg;
	cfg.K = 2;
	cfg.epochs = 5;
	cfg.sample_count = 32;
	cfg.batch_size = 8;
	try {
		train_unit(target, cfg);
		FAIL("expected DivergenceError");
	}
	catch (const DivergenceError &e) {
		CHECK(e.epoch() == 0);
	}
}

TEST_CASE("eval_mse against the closed-form relu bound")
{
	const auto p = build_relu_unit(10, 4.0);
	const auto target = TargetFunction::named(GateKind::relu, {{{-4.0, 4.0}}});
	const double step = 4.0 * std::ldexp(1.0, -10);
	const double mse = eval_mse(p, target, 1001);
	CHECK(mse >= 0.0);
	CHECK(mse <= step * step);
}

TEST_CASE("eval_mse of an exactly-zero unit on the zero target")
{
	AmosUnitParams p = build_relu_unit(3, 1.0);
	p.d = {0.0, 0.0, 0.0};
	TargetFunction target;
	target.arity = 1;
	target.domain = {{-1.0, 1.0}};
	target.tabulated = [](double, double) { return 0.0; };
	CHECK(eval_mse(p, target, 101) == 0.0);
}

TEST_CASE("eval_mse is traversal-order independent up to rounding")
{
	const auto p = amos::testing::random_unit(6, 1, GateKind::sigmoid, 9);
	const auto target = TargetFunction::named(GateKind::sigmoid);
	const int n = 501;
	const double forward = eval_mse(p, target, n);
	double reversed = 0.0;
	for (int i = n - 1; i >= 0; --i) {
		const double x = -8.0 + 16.0 * i / (n - 1);
		const double err = evaluate_unit(p, x).y - sigmoid(x);
		reversed += err * err;
	}
	reversed /= n;
	CHECK(close_rel(forward, reversed, 1e-12));
	CHECK_THROWS_AS(eval_mse(p, target, 1), std::invalid_argument);
}

namespace {

/// Greedy staircase fit: repeatedly split the grid cell with the largest
/// squared-error mass and take per-cell means. A trained K-neuron unit can
/// always represent such a staircase, so this bounds what training should
/// reach; used to sanity-check the approximation-quality thresholds.
double greedy_staircase_mse(const TargetFunction &target, int jumps, int grid)
{
	std::vector<double> xs(grid), fs(grid);
	const auto &iv = target.domain[0];
	for (int i = 0; i < grid; ++i) {
		xs[i] = iv[0] + (iv[1] - iv[0]) * i / (grid - 1);
		fs[i] = target(xs[i]);
	}
	std::vector<int> bounds = {0, grid};  // half-open cells
	auto cell_sse = [&](int lo, int hi) {
		double mean = 0.0;
		for (int i = lo; i < hi; ++i) {
			mean += fs[i];
		}
		mean /= (hi - lo);
		double sse = 0.0;
		for (int i = lo; i < hi; ++i) {
			sse += (fs[i] - mean) * (fs[i] - mean);
		}
		return sse;
	};
	for (int split = 0; split < jumps; ++split) {
		double worst = -1.0;
		std::size_t worst_cell = 0;
		for (std::size_t c = 0; c + 1 < bounds.size(); ++c) {
			if (bounds[c + 1] - bounds[c] < 2) {
				continue;
			}
			const double sse = cell_sse(bounds[c], bounds[c + 1]);
			if (sse > worst) {
				worst = sse;
				worst_cell = c;
			}
		}
		const int mid = (bounds[worst_cell] + bounds[worst_cell + 1]) / 2;
		bounds.insert(bounds.begin() + static_cast<long>(worst_cell) + 1, mid);
	}
	double total = 0.0;
	for (std::size_t c = 0; c + 1 < bounds.size(); ++c) {
		total += cell_sse(bounds[c], bounds[c + 1]);
	}
	return total / grid;
}

}  // namespace

TEST_CASE("a K-jump staircase already meets the sigmoid quality bar")
{
	const auto target = TargetFunction::named(GateKind::sigmoid);
	CHECK(greedy_staircase_mse(target, 8, 2001) <= 1e-2);
}

TEST_CASE("short sigmoid training run improves on its starting loss")
{
	auto target = TargetFunction::named(GateKind::sigmoid);
	TrainConfig cfg;
	cfg.K = 8;
	cfg.epochs = 40;
	cfg.sample_count = 512;
	cfg.batch_size = 32;
	cfg.rng_seed = 3;
	const auto report = train_unit(target, cfg);
	REQUIRE(report.mse_history.size() == 40);
	CHECK(report.mse_history.back() < report.mse_history.front());
	CHECK(report.final_grid_mse < 0.05);
}
