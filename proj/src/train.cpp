// SPDX-License-Identifier: Apache-2.0
#include "amos/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "amos/errors.hpp"

namespace amos {

double TargetFunction::operator()(double x, double x2) const
{
	if (tabulated) {
		return tabulated(x, x2);
	}
	if (arity == 2) {
		return reference_activation(kind, x, x2);
	}
	return reference_activation(kind, x);
}

void TargetFunction::validate() const
{
	if (arity != 1 && arity != 2) {
		throw std::invalid_argument("target arity must be 1 or 2");
	}
	if (domain.size() != static_cast<std::size_t>(arity)) {
		throw std::invalid_argument("target needs one domain interval per input");
	}
	for (const auto &iv : domain) {
		if (!std::isfinite(iv[0]) || !std::isfinite(iv[1]) || !(iv[0] < iv[1])) {
			throw std::invalid_argument(
			    "target domain bounds must be finite with lower < upper");
		}
	}
	if (!tabulated && kind == GateKind::mult && arity != 2) {
		throw std::invalid_argument("mult target requires arity 2");
	}
	if (!tabulated && kind != GateKind::mult && arity != 1) {
		throw std::invalid_argument("scalar target requires arity 1");
	}
}

TargetFunction TargetFunction::named(GateKind kind)
{
	switch (kind) {
		case GateKind::sigmoid:
			return named(kind, {{{-8.0, 8.0}}});
		case GateKind::swish:
			return named(kind, {{{-6.0, 6.0}}});
		case GateKind::relu:
			return named(kind, {{{-8.0, 8.0}}});
		case GateKind::mult:
			return named(kind, {{{-1.0, 1.0}, {-1.0, 1.0}}});
		default:
			throw std::invalid_argument("no trainable target for kind " +
			                            to_string(kind));
	}
}

TargetFunction TargetFunction::named(GateKind kind,
                                     std::vector<std::array<double, 2>> domain)
{
	TargetFunction t;
	t.kind = kind;
	t.arity = (kind == GateKind::mult) ? 2 : 1;
	t.domain = std::move(domain);
	t.validate();
	return t;
}

void TrainConfig::validate() const
{
	if (K < 1 || sample_count < 1 || epochs < 1 || batch_size < 1) {
		throw std::invalid_argument("all training counts must be >= 1");
	}
	if (!(gamma > 0.0) || !std::isfinite(gamma)) {
		throw std::invalid_argument("gamma must be > 0");
	}
	if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
		throw std::invalid_argument("learning rate must be > 0");
	}
	if (init_scheme != "spread" && init_scheme != "ladder") {
		throw std::invalid_argument("unknown init scheme '" + init_scheme + "'");
	}
}

TrainConfig default_train_config(GateKind kind, int K)
{
	TrainConfig cfg;
	cfg.K = K;
	switch (kind) {
		case GateKind::mult:
			cfg.sample_count = 4096;
			cfg.epochs = 1200;
			cfg.batch_size = 32;
			break;
		case GateKind::swish:
			cfg.sample_count = 4096;
			cfg.epochs = 1500;
			cfg.batch_size = 32;
			break;
		default:
			cfg.sample_count = 4096;
			cfg.epochs = 600;
			cfg.batch_size = 32;
			break;
	}
	return cfg;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x)
{
	x += 0x9e3779b97f4a7c15ULL;
	x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
	x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
	return x ^ (x >> 31);
}

}  // namespace

std::vector<TrainSample> sample_dataset(const TargetFunction &target, int n,
                                        std::uint64_t seed)
{
	target.validate();
	if (n < 1) {
		throw std::invalid_argument("sample_dataset: n must be >= 1");
	}
	std::mt19937_64 rng(seed);
	std::uniform_real_distribution<double> u0(target.domain[0][0],
	                                          target.domain[0][1]);
	std::vector<TrainSample> out(n);
	if (target.arity == 1) {
		for (auto &s : out) {
			s.x = u0(rng);
			s.target = target(s.x);
		}
	}
	else {
		std::uniform_real_distribution<double> u1(target.domain[1][0],
		                                          target.domain[1][1]);
		for (auto &s : out) {
			s.x = u0(rng);
			s.x2 = u1(rng);
			s.target = target(s.x, s.x2);
		}
	}
	return out;
}

double pseudo_derivative(double v, double gamma)
{
	if (!(gamma > 0.0) || !std::isfinite(gamma)) {
		throw std::invalid_argument("pseudo_derivative: gamma must be > 0");
	}
	const double t = 1.0 - std::abs(v) / gamma;
	return t > 0.0 ? t / gamma : 0.0;
}

double soft_step(double v, double gamma)
{
	if (!(gamma > 0.0) || !std::isfinite(gamma)) {
		throw std::invalid_argument("soft_step: gamma must be > 0");
	}
	if (v <= -gamma) {
		return 0.0;
	}
	if (v >= gamma) {
		return 1.0;
	}
	if (v <= 0.0) {
		const double t = v + gamma;
		return t * t / (2.0 * gamma * gamma);
	}
	const double t = gamma - v;
	return 1.0 - t * t / (2.0 * gamma * gamma);
}

namespace {

struct FbScratch {
	std::vector<double> v, z, dz;
};

// Unvalidated forward/backward used by both the public entry point and the
// training loop.
void forward_backward_core(const AmosUnitParams &params, double x, double xx2,
                           double target, double gamma, bool surrogate_forward,
                           UnitGradients &g, FbScratch &s)
{
	const int K = params.K;
	const bool two = params.arity == 2;
	s.v.resize(K);
	s.z.resize(K);
	s.dz.resize(K);

	double y = 0.0;
	for (int i = 0; i < K; ++i) {
		double vi = params.c[i] * x;
		if (two) {
			vi += params.c2[i] * xx2;
		}
		const double *hrow = params.h.data() + i * (i - 1) / 2;
		for (int j = 0; j < i; ++j) {
			vi -= hrow[j] * s.z[j];
		}
		vi -= params.T[i];
		s.v[i] = vi;
		s.z[i] =
		    surrogate_forward ? soft_step(vi, gamma) : (vi >= 0.0 ? 1.0 : 0.0);
		y += params.d[i] * s.z[i];
	}

	g.y = y;
	const double err = y - target;
	g.loss = err * err;
	const double gy = 2.0 * err;

	g.c.assign(K, 0.0);
	g.d.assign(K, 0.0);
	g.T.assign(K, 0.0);
	g.h.assign(params.h.size(), 0.0);
	if (two) {
		g.c2.assign(K, 0.0);
	}
	else {
		g.c2.clear();
	}

	// dL/dz_i accumulates the readout path and, while walking backwards,
	// the paths through the lateral inputs of later gates.
	for (int i = 0; i < K; ++i) {
		s.dz[i] = gy * params.d[i];
		g.d[i] = gy * s.z[i];
	}
	for (int i = K - 1; i >= 0; --i) {
		const double dv = s.dz[i] * pseudo_derivative(s.v[i], gamma);
		g.c[i] = dv * x;
		if (two) {
			g.c2[i] = dv * xx2;
		}
		g.T[i] = -dv;
		const double *hrow = params.h.data() + i * (i - 1) / 2;
		double *grow = g.h.data() + i * (i - 1) / 2;
		for (int j = 0; j < i; ++j) {
			grow[j] = -dv * s.z[j];
			s.dz[j] -= dv * hrow[j];
		}
	}
}

}  // namespace

UnitGradients unit_forward_backward(const AmosUnitParams &params, double x,
                                    std::optional<double> x2, double target,
                                    double gamma, bool surrogate_forward)
{
	params.validate();
	if ((params.arity == 2) != x2.has_value()) {
		throw std::invalid_argument("unit_forward_backward: arity mismatch");
	}
	if (!std::isfinite(x) || (x2 && !std::isfinite(*x2)) ||
	    !std::isfinite(target)) {
		throw std::invalid_argument("unit_forward_backward: non-finite input");
	}
	if (!(gamma > 0.0) || !std::isfinite(gamma)) {
		throw std::invalid_argument("unit_forward_backward: gamma must be > 0");
	}
	UnitGradients g;
	FbScratch scratch;
	forward_backward_core(params, x, x2.value_or(0.0), target, gamma,
	                      surrogate_forward, g, scratch);
	return g;
}

namespace {

struct ParamView {
	std::vector<double> *vecs[5];
	int count = 0;

	explicit ParamView(AmosUnitParams &p)
	{
		vecs[count++] = &p.c;
		if (p.arity == 2) {
			vecs[count++] = &p.c2;
		}
		vecs[count++] = &p.d;
		vecs[count++] = &p.h;
		vecs[count++] = &p.T;
	}
};

struct GradView {
	const std::vector<double> *vecs[5];
	int count = 0;

	GradView(const UnitGradients &g, int arity)
	{
		vecs[count++] = &g.c;
		if (arity == 2) {
			vecs[count++] = &g.c2;
		}
		vecs[count++] = &g.d;
		vecs[count++] = &g.h;
		vecs[count++] = &g.T;
	}
};

class AdamOptimizer {
public:
	AdamOptimizer(const AmosUnitParams &p, double lr)
	    : m_lr(lr)
	{
		auto sizes = {p.c.size(), p.arity == 2 ? p.c2.size() : std::size_t(0),
		              p.d.size(), p.h.size(), p.T.size()};
		std::size_t total = 0;
		for (auto s : sizes) {
			total += s;
		}
		m_m.assign(total, 0.0);
		m_v.assign(total, 0.0);
	}

	void step(AmosUnitParams &p, const std::vector<double> &grad)
	{
		m_t += 1;
		const double bc1 = 1.0 - std::pow(kBeta1, m_t);
		const double bc2 = 1.0 - std::pow(kBeta2, m_t);
		ParamView view(p);
		std::size_t k = 0;
		for (int g = 0; g < view.count; ++g) {
			for (double &w : *view.vecs[g]) {
				const double gr = grad[k];
				m_m[k] = kBeta1 * m_m[k] + (1.0 - kBeta1) * gr;
				m_v[k] = kBeta2 * m_v[k] + (1.0 - kBeta2) * gr * gr;
				const double mhat = m_m[k] / bc1;
				const double vhat = m_v[k] / bc2;
				w -= m_lr * mhat / (std::sqrt(vhat) + kEps);
				++k;
			}
		}
	}

	static constexpr double kBeta1 = 0.9;
	static constexpr double kBeta2 = 0.999;
	static constexpr double kEps = 1e-8;

private:
	double m_lr;
	long m_t = 0;
	std::vector<double> m_m, m_v;
};

void flatten_grads(const UnitGradients &g, int arity, std::vector<double> &out)
{
	out.clear();
	GradView view(g, arity);
	for (int i = 0; i < view.count; ++i) {
		out.insert(out.end(), view.vecs[i]->begin(), view.vecs[i]->end());
	}
}

/// Range of the target over a coarse scan of its domain.
std::pair<double, double> target_range(const TargetFunction &target)
{
	const int n = 64;
	double lo = std::numeric_limits<double>::infinity();
	double hi = -lo;
	const auto &d0 = target.domain[0];
	if (target.arity == 1) {
		for (int i = 0; i <= n; ++i) {
			const double x = d0[0] + (d0[1] - d0[0]) * i / n;
			const double f = target(x);
			lo = std::min(lo, f);
			hi = std::max(hi, f);
		}
	}
	else {
		const auto &d1 = target.domain[1];
		for (int i = 0; i <= n; ++i) {
			for (int j = 0; j <= n; ++j) {
				const double x = d0[0] + (d0[1] - d0[0]) * i / n;
				const double x2 = d1[0] + (d1[1] - d1[0]) * j / n;
				const double f = target(x, x2);
				lo = std::min(lo, f);
				hi = std::max(hi, f);
			}
		}
	}
	return {lo, hi};
}

AmosUnitParams init_params(const TargetFunction &target, const TrainConfig &cfg,
                           std::mt19937_64 &rng)
{
	AmosUnitParams p;
	p.arity = target.arity;
	p.K = cfg.K;
	p.kind = target.tabulated ? GateKind::identity : target.kind;
	p.domain = target.domain;
	const int K = cfg.K;

	auto [flo, fhi] = target_range(target);
	const double frange = std::max(fhi - flo, 1e-6);

	if (cfg.init_scheme == "ladder") {
		// Binary-ladder skeleton (the closed-form ReLU structure) scaled to
		// the input span, with readout weights scaled to the output range.
		double span = 0.0;
		for (const auto &iv : target.domain) {
			span += std::max(std::abs(iv[0]), std::abs(iv[1]));
		}
		AmosUnitParams ladder = build_relu_unit(K, span);
		p.c = ladder.c;
		p.T = ladder.T;
		p.h = ladder.h;
		p.d.resize(K);
		for (int i = 0; i < K; ++i) {
			p.d[i] = ladder.d[i] * frange / span;
		}
		if (p.arity == 2) {
			p.c2.assign(K, 1.0);
		}
		return p;
	}

	// "spread" scheme: random positive input coefficients, thresholds placed
	// so each gate's boundary starts in a distinct slice of the domain,
	// small random readout weights, laterals zero.
	std::uniform_real_distribution<double> uc(0.5, 1.5);
	p.c.resize(K);
	for (double &v : p.c) {
		v = uc(rng);
	}
	if (p.arity == 2) {
		p.c2.resize(K);
		for (double &v : p.c2) {
			v = uc(rng);
		}
	}
	p.T.resize(K);
	for (int i = 0; i < K; ++i) {
		double t = 0.0;
		for (int a = 0; a < p.arity; ++a) {
			const auto &iv = target.domain[a];
			const double u = iv[0] + (i + 0.5) * (iv[1] - iv[0]) / K;
			t += (a == 0 ? p.c[i] : p.c2[i]) * u;
		}
		p.T[i] = t;
	}
	const double r = frange / K;
	std::uniform_real_distribution<double> ud(-r, r);
	p.d.resize(K);
	for (double &v : p.d) {
		v = ud(rng);
	}
	p.h.assign(static_cast<std::size_t>(K) * (K - 1) / 2, 0.0);
	return p;
}

}  // namespace

TrainReport train_unit(const TargetFunction &target, const TrainConfig &cfg)
{
	target.validate();
	cfg.validate();

	std::mt19937_64 rng(cfg.rng_seed);
	AmosUnitParams params = init_params(target, cfg, rng);
	AdamOptimizer adam(params, cfg.learning_rate);

	const int anneal_epoch = (2 * cfg.epochs) / 3;
	std::vector<double> history;
	history.reserve(cfg.epochs);
	UnitGradients g;
	FbScratch scratch;
	std::vector<double> grad_sum, grad_one;

	for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
		const double gamma =
		    epoch >= anneal_epoch ? 0.5 * cfg.gamma : cfg.gamma;
		const auto data = sample_dataset(
		    target, cfg.sample_count,
		    splitmix64(cfg.rng_seed ^ (0x5eedULL + epoch)));

		double epoch_loss = 0.0;
		std::size_t cursor = 0;
		while (cursor < data.size()) {
			const std::size_t end =
			    std::min(cursor + cfg.batch_size, data.size());
			grad_sum.clear();
			for (std::size_t s = cursor; s < end; ++s) {
				const auto &smp = data[s];
				forward_backward_core(params, smp.x, smp.x2, smp.target, gamma,
				                      false, g, scratch);
				epoch_loss += g.loss;
				flatten_grads(g, params.arity, grad_one);
				if (grad_sum.empty()) {
					grad_sum = grad_one;
				}
				else {
					for (std::size_t k = 0; k < grad_sum.size(); ++k) {
						grad_sum[k] += grad_one[k];
					}
				}
			}
			const double inv = 1.0 / static_cast<double>(end - cursor);
			for (double &v : grad_sum) {
				v *= inv;
			}
			adam.step(params, grad_sum);
			cursor = end;
		}
		const double mse = epoch_loss / static_cast<double>(data.size());
		if (!std::isfinite(mse)) {
			throw DivergenceError(epoch);
		}
		history.push_back(mse);
	}

	TrainReport report;
	report.params = std::move(params);
	report.mse_history = std::move(history);
	report.final_grid_mse =
	    eval_mse(report.params, target, target.arity == 1 ? 1001 : 201);
	return report;
}

double eval_mse(const AmosUnitParams &params, const TargetFunction &target,
                int grid_points_per_axis)
{
	params.validate();
	target.validate();
	if (grid_points_per_axis < 2) {
		throw std::invalid_argument("eval_mse: need >= 2 grid points per axis");
	}
	if (params.arity != target.arity) {
		throw std::invalid_argument("eval_mse: unit/target arity mismatch");
	}
	const int n = grid_points_per_axis;
	const auto &d0 = target.domain[0];
	std::vector<std::uint8_t> z;
	double sum = 0.0;
	if (target.arity == 1) {
		for (int i = 0; i < n; ++i) {
			const double x = d0[0] + (d0[1] - d0[0]) * i / (n - 1);
			const double err =
			    detail::evaluate_unit_value(params, x, 0.0, z) - target(x);
			sum += err * err;
		}
		return sum / n;
	}
	const auto &d1 = target.domain[1];
	for (int i = 0; i < n; ++i) {
		const double x = d0[0] + (d0[1] - d0[0]) * i / (n - 1);
		for (int j = 0; j < n; ++j) {
			const double x2 = d1[0] + (d1[1] - d1[0]) * j / (n - 1);
			const double err =
			    detail::evaluate_unit_value(params, x, x2, z) - target(x, x2);
			sum += err * err;
		}
	}
	return sum / (static_cast<double>(n) * n);
}

}  // namespace amos
