// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "amos/compile.hpp"
#include "amos/graph.hpp"
#include "amos/unit.hpp"

namespace amos::testing {

inline bool close_rel(double a, double b, double rel)
{
	return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)});
}

/// Plausible (not trained) unit parameters for structural tests.
inline AmosUnitParams random_unit(int K, int arity, GateKind kind,
                                  std::uint64_t seed)
{
	std::mt19937_64 rng(seed);
	std::uniform_real_distribution<double> uc(0.5, 1.5);
	std::uniform_real_distribution<double> ut(-1.5, 1.5);
	std::uniform_real_distribution<double> ud(-0.4, 0.4);
	std::uniform_real_distribution<double> uh(-0.3, 0.3);
	AmosUnitParams p;
	p.arity = arity;
	p.K = K;
	p.kind = kind;
	p.c.resize(K);
	p.d.resize(K);
	p.T.resize(K);
	p.h.resize(static_cast<std::size_t>(K) * (K - 1) / 2);
	for (int i = 0; i < K; ++i) {
		p.c[i] = uc(rng);
		p.d[i] = ud(rng);
		p.T[i] = ut(rng);
	}
	for (auto &v : p.h) {
		v = uh(rng);
	}
	if (arity == 2) {
		p.c2.resize(K);
		for (auto &v : p.c2) {
			v = uc(rng);
		}
		p.domain = {{-1.0, 1.0}, {-1.0, 1.0}};
	}
	else {
		p.domain = {{-2.0, 2.0}};
	}
	return p;
}

/// Unit library with small K values, fast enough for property sweeps.
inline UnitLibrary test_library()
{
	UnitLibrary lib;
	lib.insert(build_relu_unit(6, 8.0));
	lib.insert(random_unit(4, 1, GateKind::sigmoid, 11));
	lib.insert(random_unit(5, 1, GateKind::swish, 22));
	lib.insert(random_unit(6, 2, GateKind::mult, 33));
	return lib;
}

inline Matrix random_matrix(int rows, int cols, std::mt19937_64 &rng,
                            double scale = 0.8)
{
	std::uniform_real_distribution<double> u(-scale, scale);
	Matrix m(rows, cols);
	for (auto &v : m.data) {
		v = u(rng);
	}
	return m;
}

inline Vector random_vector(int n, std::mt19937_64 &rng, double scale = 0.5)
{
	std::uniform_real_distribution<double> u(-scale, scale);
	Vector v(n);
	for (auto &x : v) {
		x = u(rng);
	}
	return v;
}

/// Random layered toy graph with at least one nonlinear gate. Uses only the
/// kinds covered by test_library().
inline AnnGraph random_toy_graph(std::uint64_t seed)
{
	std::mt19937_64 rng(seed);
	std::uniform_int_distribution<int> udim(2, 5);
	std::uniform_int_distribution<int> udepth(1, 3);
	std::uniform_int_distribution<int> uop(0, 3);
	const GateKind acts[] = {GateKind::relu, GateKind::sigmoid,
	                         GateKind::swish};
	std::uniform_int_distribution<int> uact(0, 2);

	AnnGraph g;
	int cur = g.add_input(udim(rng));
	int gates = 0;
	const int depth = udepth(rng);
	for (int level = 0; level < depth; ++level) {
		const int dim = udim(rng);
		switch (uop(rng)) {
			case 0: {  // dense + activation
				cur = g.add_dense(cur, random_matrix(dim, g.node_dim(cur), rng),
				                  random_vector(dim, rng));
				cur = g.add_activation(cur, acts[uact(rng)]);
				gates += 1;
				break;
			}
			case 1: {  // residual add around an activation
				const int a = g.add_dense(
				    cur, random_matrix(dim, g.node_dim(cur), rng),
				    random_vector(dim, rng));
				int b = g.add_dense(cur,
				                    random_matrix(dim, g.node_dim(cur), rng),
				                    random_vector(dim, rng));
				b = g.add_activation(b, acts[uact(rng)]);
				cur = g.add_add(a, b);
				gates += 1;
				break;
			}
			case 2: {  // gating multiply
				int a = g.add_dense(cur,
				                    random_matrix(dim, g.node_dim(cur), rng),
				                    random_vector(dim, rng));
				int b = g.add_dense(cur,
				                    random_matrix(dim, g.node_dim(cur), rng),
				                    random_vector(dim, rng));
				b = g.add_activation(b, GateKind::sigmoid);
				cur = g.add_multiply(a, b);
				gates += 2;
				break;
			}
			default: {  // pool then dense
				cur = g.add_global_avg_pool(cur, 1);
				cur = g.add_dense(cur, random_matrix(dim, 1, rng),
				                  random_vector(dim, rng));
				break;
			}
		}
	}
	if (gates == 0) {
		cur = g.add_activation(cur, GateKind::relu);
	}
	const int out_dim = udim(rng);
	cur = g.add_dense(cur, random_matrix(out_dim, g.node_dim(cur), rng),
	                  random_vector(out_dim, rng));
	g.set_output(cur);
	g.validate();
	return g;
}

/// Composes evaluate_unit along the graph: the quantized reference the
/// compiled network must reproduce at steady state. Independent of the
/// compiler and simulator code paths.
inline Vector unit_composition_forward(const AnnGraph &g,
                                       const UnitLibrary &lib,
                                       const Vector &input)
{
	std::vector<Vector> values(g.nodes.size());
	for (int id = 0; id < static_cast<int>(g.nodes.size()); ++id) {
		std::visit(
		    [&](const auto &n) {
			    using T = std::decay_t<decltype(n)>;
			    if constexpr (std::is_same_v<T, InputNode>) {
				    values[id] = input;
			    }
			    else if constexpr (std::is_same_v<T, DenseNode>) {
				    Vector v = matvec(n.weights, values[n.input]);
				    for (std::size_t k = 0; k < v.size(); ++k) {
					    v[k] += n.bias[k];
				    }
				    values[id] = std::move(v);
			    }
			    else if constexpr (std::is_same_v<T, ActivationNode>) {
				    Vector v = values[n.input];
				    if (n.kind != GateKind::identity) {
					    const auto &params = lib.require(n.kind);
					    for (double &x : v) {
						    x = evaluate_unit(params, x).y;
					    }
				    }
				    values[id] = std::move(v);
			    }
			    else if constexpr (std::is_same_v<T, AddNode>) {
				    Vector v = values[n.lhs];
				    for (std::size_t k = 0; k < v.size(); ++k) {
					    v[k] += values[n.rhs][k];
				    }
				    values[id] = std::move(v);
			    }
			    else if constexpr (std::is_same_v<T, MultiplyNode>) {
				    const auto &params = lib.require(GateKind::mult);
				    Vector v(values[n.lhs].size());
				    for (std::size_t k = 0; k < v.size(); ++k) {
					    v[k] = evaluate_unit(params, values[n.lhs][k],
					                         values[n.rhs][k])
					               .y;
				    }
				    values[id] = std::move(v);
			    }
			    else if constexpr (std::is_same_v<T, GlobalAvgPoolNode>) {
				    const Vector &in = values[n.input];
				    const int gs = static_cast<int>(in.size()) / n.groups;
				    Vector v(n.groups, 0.0);
				    for (int grp = 0; grp < n.groups; ++grp) {
					    for (int k = 0; k < gs; ++k) {
						    v[grp] += in[grp * gs + k];
					    }
					    v[grp] /= gs;
				    }
				    values[id] = std::move(v);
			    }
			    else if constexpr (std::is_same_v<T, OutputNode>) {
				    values[id] = values[n.input];
			    }
		    },
		    g.nodes[id]);
	}
	return values[g.output_id];
}

/// Longest gate path in unit-latency steps: the latency the compiler must
/// report. Computed directly on the graph.
inline int depth_oracle(const AnnGraph &g, const UnitLibrary &lib)
{
	std::vector<int> depth(g.nodes.size(), 0);
	for (int id = 0; id < static_cast<int>(g.nodes.size()); ++id) {
		std::visit(
		    [&](const auto &n) {
			    using T = std::decay_t<decltype(n)>;
			    if constexpr (std::is_same_v<T, InputNode>) {
				    depth[id] = 0;
			    }
			    else if constexpr (std::is_same_v<T, AddNode>) {
				    depth[id] = std::max(depth[n.lhs], depth[n.rhs]);
			    }
			    else if constexpr (std::is_same_v<T, MultiplyNode>) {
				    depth[id] = std::max(depth[n.lhs], depth[n.rhs]) +
				                lib.require(GateKind::mult).K + 1;
			    }
			    else if constexpr (std::is_same_v<T, ActivationNode>) {
				    depth[id] = depth[n.input];
				    if (n.kind != GateKind::identity) {
					    depth[id] += lib.require(n.kind).K + 1;
				    }
			    }
			    else {
				    depth[id] = depth[n.input];
			    }
		    },
		    g.nodes[id]);
	}
	return depth[g.output_id];
}

/// Unique scratch directory for file-based tests.
class TempDir {
public:
	explicit TempDir(const std::string &tag)
	{
		auto base = std::filesystem::temp_directory_path();
		for (int i = 0;; ++i) {
			auto candidate = base / ("amos_" + tag + "_" + std::to_string(i));
			std::error_code ec;
			if (std::filesystem::create_directory(candidate, ec)) {
				m_path = candidate;
				return;
			}
		}
	}
	~TempDir()
	{
		std::error_code ec;
		std::filesystem::remove_all(m_path, ec);
	}
	std::string file(const std::string &name) const
	{
		return (m_path / name).string();
	}

private:
	std::filesystem::path m_path;
};

}  // namespace amos::testing
