// SPDX-License-Identifier: Apache-2.0
#include "amos/unit.hpp"

#include <cmath>
#include <stdexcept>

namespace amos {

GateKind gate_kind_from_string(const std::string &s)
{
	if (s == "relu") return GateKind::relu;
	if (s == "sigmoid") return GateKind::sigmoid;
	if (s == "swish") return GateKind::swish;
	if (s == "mult") return GateKind::mult;
	if (s == "identity") return GateKind::identity;
	throw std::invalid_argument("unknown gate kind '" + s + "'");
}

std::string to_string(GateKind kind)
{
	switch (kind) {
		case GateKind::relu:
			return "relu";
		case GateKind::sigmoid:
			return "sigmoid";
		case GateKind::swish:
			return "swish";
		case GateKind::mult:
			return "mult";
		case GateKind::identity:
			return "identity";
	}
	throw std::invalid_argument("invalid gate kind");
}

int AmosUnitParams::h_index(int i, int j)
{
	if (j >= i || j < 0) {
		throw std::invalid_argument("h_index requires 0 <= j < i");
	}
	return i * (i - 1) / 2 + j;
}

namespace {

void require_finite(const std::vector<double> &v, const char *name)
{
	for (double x : v) {
		if (!std::isfinite(x)) {
			throw std::invalid_argument(std::string("non-finite entry in ") +
			                            name);
		}
	}
}

}  // namespace

void AmosUnitParams::validate() const
{
	if (arity != 1 && arity != 2) {
		throw std::invalid_argument("unit arity must be 1 or 2");
	}
	if (K < 1) {
		throw std::invalid_argument("unit must have K >= 1 gates");
	}
	const auto k = static_cast<std::size_t>(K);
	if (c.size() != k || d.size() != k || T.size() != k) {
		throw std::invalid_argument("c, d, T must all have length K");
	}
	if (arity == 2 && c2.size() != k) {
		throw std::invalid_argument("c2 must have length K for arity-2 units");
	}
	if (arity == 1 && !c2.empty()) {
		throw std::invalid_argument("c2 must be empty for arity-1 units");
	}
	if (h.size() != static_cast<std::size_t>(K) * (K - 1) / 2) {
		throw std::invalid_argument("h must have length K*(K-1)/2");
	}
	require_finite(c, "c");
	require_finite(c2, "c2");
	require_finite(d, "d");
	require_finite(h, "h");
	require_finite(T, "T");
}

double heaviside(double v)
{
	if (!std::isfinite(v)) {
		throw std::invalid_argument("heaviside: non-finite input");
	}
	return v >= 0.0 ? 1.0 : 0.0;
}

namespace detail {

double evaluate_unit_value(const AmosUnitParams &params, double x, double x2,
                           std::vector<std::uint8_t> &z_scratch)
{
	z_scratch.assign(params.K, 0);
	double y = 0.0;
	for (int i = 0; i < params.K; ++i) {
		double v = params.c[i] * x;
		if (params.arity == 2) {
			v += params.c2[i] * x2;
		}
		const double *hrow = params.h.data() + i * (i - 1) / 2;
		for (int j = 0; j < i; ++j) {
			if (z_scratch[j]) {
				v -= hrow[j];
			}
		}
		v -= params.T[i];
		if (v >= 0.0) {
			z_scratch[i] = 1;
			y += params.d[i];
		}
	}
	return y;
}

}  // namespace detail

UnitEvaluation evaluate_unit(const AmosUnitParams &params, double x,
                             std::optional<double> x2)
{
	params.validate();
	if ((params.arity == 2) != x2.has_value()) {
		throw std::invalid_argument(
		    "evaluate_unit: arity mismatch between params and inputs");
	}
	if (!std::isfinite(x) || (x2 && !std::isfinite(*x2))) {
		throw std::invalid_argument("evaluate_unit: non-finite input");
	}

	UnitEvaluation ev;
	ev.y = detail::evaluate_unit_value(params, x, x2.value_or(0.0), ev.z);
	for (std::uint8_t zi : ev.z) {
		ev.spike_count += zi;
	}
	return ev;
}

AmosUnitParams build_relu_unit(int K, double alpha)
{
	if (K < 1) {
		throw std::invalid_argument("build_relu_unit: K must be >= 1");
	}
	if (!std::isfinite(alpha) || alpha <= 0.0) {
		throw std::invalid_argument("build_relu_unit: alpha must be > 0");
	}
	AmosUnitParams p;
	p.arity = 1;
	p.K = K;
	p.kind = GateKind::relu;
	p.c.assign(K, 1.0);
	p.T.resize(K);
	p.d.resize(K);
	p.h.resize(static_cast<std::size_t>(K) * (K - 1) / 2);
	for (int i = 0; i < K; ++i) {
		const double w = alpha * std::ldexp(1.0, -(i + 1));
		p.T[i] = w;
		p.d[i] = w;
	}
	for (int i = 1; i < K; ++i) {
		for (int j = 0; j < i; ++j) {
			p.h[i * (i - 1) / 2 + j] = alpha * std::ldexp(1.0, -(j + 1));
		}
	}
	p.domain = {{-alpha, alpha}};
	return p;
}

long long parameter_count(int arity, int K)
{
	if (arity != 1 && arity != 2) {
		throw std::invalid_argument("parameter_count: arity must be 1 or 2");
	}
	if (K < 1) {
		throw std::invalid_argument("parameter_count: K must be >= 1");
	}
	const long long k = K;
	return (2 + arity) * k + k * (k - 1) / 2;
}

double relu(double x)
{
	return x > 0.0 ? x : 0.0;
}

double sigmoid(double x)
{
	return 1.0 / (1.0 + std::exp(-x));
}

double swish(double x)
{
	return x * sigmoid(x);
}

double reference_activation(GateKind kind, double x, std::optional<double> x2)
{
	const bool two = x2.has_value();
	switch (kind) {
		case GateKind::relu:
			if (two) break;
			return relu(x);
		case GateKind::sigmoid:
			if (two) break;
			return sigmoid(x);
		case GateKind::swish:
			if (two) break;
			return swish(x);
		case GateKind::identity:
			if (two) break;
			return x;
		case GateKind::mult:
			if (!two) break;
			return x * (*x2);
	}
	throw std::invalid_argument("reference_activation: wrong arity for kind " +
	                            to_string(kind));
}

}  // namespace amos
