// SPDX-License-Identifier: Apache-2.0
#include "amos/graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace amos {

Matrix Matrix::identity(int n)
{
	Matrix m(n, n);
	for (int i = 0; i < n; ++i) {
		m(i, i) = 1.0;
	}
	return m;
}

Vector matvec(const Matrix &m, const Vector &v)
{
	if (static_cast<int>(v.size()) != m.cols) {
		throw std::invalid_argument("matvec: dimension mismatch");
	}
	Vector out(m.rows, 0.0);
	for (int r = 0; r < m.rows; ++r) {
		double acc = 0.0;
		const double *row = m.data.data() + static_cast<std::size_t>(r) * m.cols;
		for (int c = 0; c < m.cols; ++c) {
			acc += row[c] * v[c];
		}
		out[r] = acc;
	}
	return out;
}

Matrix matmul(const Matrix &a, const Matrix &b)
{
	if (a.cols != b.rows) {
		throw std::invalid_argument("matmul: dimension mismatch");
	}
	Matrix out(a.rows, b.cols);
	for (int r = 0; r < a.rows; ++r) {
		for (int k = 0; k < a.cols; ++k) {
			const double av = a(r, k);
			if (av == 0.0) {
				continue;
			}
			for (int c = 0; c < b.cols; ++c) {
				out(r, c) += av * b(k, c);
			}
		}
	}
	return out;
}

int AnnGraph::add_input(int dim)
{
	nodes.push_back(InputNode{dim});
	return static_cast<int>(nodes.size()) - 1;
}

int AnnGraph::add_dense(int input, Matrix weights, Vector bias)
{
	nodes.push_back(DenseNode{input, std::move(weights), std::move(bias)});
	return static_cast<int>(nodes.size()) - 1;
}

int AnnGraph::add_activation(int input, GateKind kind)
{
	nodes.push_back(ActivationNode{input, kind});
	return static_cast<int>(nodes.size()) - 1;
}

int AnnGraph::add_add(int lhs, int rhs)
{
	nodes.push_back(AddNode{lhs, rhs});
	return static_cast<int>(nodes.size()) - 1;
}

int AnnGraph::add_multiply(int lhs, int rhs)
{
	nodes.push_back(MultiplyNode{lhs, rhs});
	return static_cast<int>(nodes.size()) - 1;
}

int AnnGraph::add_global_avg_pool(int input, int groups)
{
	nodes.push_back(GlobalAvgPoolNode{input, groups});
	return static_cast<int>(nodes.size()) - 1;
}

int AnnGraph::add_se_block(int input, int pool_groups, Matrix reduce_w,
                           Vector reduce_b, Matrix expand_w, Vector expand_b)
{
	nodes.push_back(SeBlockNode{input, pool_groups, std::move(reduce_w),
	                            std::move(reduce_b), std::move(expand_w),
	                            std::move(expand_b)});
	return static_cast<int>(nodes.size()) - 1;
}

void AnnGraph::set_output(int input)
{
	nodes.push_back(OutputNode{input});
	output_id = static_cast<int>(nodes.size()) - 1;
}

namespace {

std::vector<int> node_inputs(const AnnNode &node)
{
	return std::visit(
	    [](const auto &n) -> std::vector<int> {
		    using T = std::decay_t<decltype(n)>;
		    if constexpr (std::is_same_v<T, InputNode>) {
			    return {};
		    }
		    else if constexpr (std::is_same_v<T, AddNode> ||
		                       std::is_same_v<T, MultiplyNode>) {
			    return {n.lhs, n.rhs};
		    }
		    else {
			    return {n.input};
		    }
	    },
	    node);
}

void check_matrix(const Matrix &m, int node_id, const char *what)
{
	if (m.rows < 1 || m.cols < 1 ||
	    m.data.size() != static_cast<std::size_t>(m.rows) * m.cols) {
		throw std::invalid_argument("node " + std::to_string(node_id) + ": " +
		                            what + " has inconsistent shape");
	}
	for (double v : m.data) {
		if (!std::isfinite(v)) {
			throw std::invalid_argument("node " + std::to_string(node_id) +
			                            ": " + what + " has non-finite entry");
		}
	}
}

}  // namespace

int AnnGraph::input_dim() const
{
	for (const auto &node : nodes) {
		if (const auto *in = std::get_if<InputNode>(&node)) {
			return in->dim;
		}
	}
	throw std::invalid_argument("graph has no input node");
}

int AnnGraph::node_dim(int id) const
{
	if (id < 0 || id >= static_cast<int>(nodes.size())) {
		throw std::invalid_argument("node id out of range");
	}
	const AnnNode &node = nodes[id];
	return std::visit(
	    [&](const auto &n) -> int {
		    using T = std::decay_t<decltype(n)>;
		    if constexpr (std::is_same_v<T, InputNode>) {
			    return n.dim;
		    }
		    else if constexpr (std::is_same_v<T, DenseNode>) {
			    return n.weights.rows;
		    }
		    else if constexpr (std::is_same_v<T, GlobalAvgPoolNode>) {
			    return n.groups;
		    }
		    else if constexpr (std::is_same_v<T, AddNode> ||
		                       std::is_same_v<T, MultiplyNode>) {
			    return node_dim(n.lhs);
		    }
		    else if constexpr (std::is_same_v<T, SeBlockNode>) {
			    return node_dim(n.input);
		    }
		    else {
			    return node_dim(n.input);
		    }
	    },
	    node);
}

void AnnGraph::validate() const
{
	if (nodes.empty()) {
		throw std::invalid_argument("graph is empty");
	}
	int input_count = 0;
	int output_count = 0;
	for (int id = 0; id < static_cast<int>(nodes.size()); ++id) {
		for (int ref : node_inputs(nodes[id])) {
			if (ref < 0 || ref >= id) {
				throw std::invalid_argument(
				    "node " + std::to_string(id) +
				    ": predecessor reference " + std::to_string(ref) +
				    " does not precede the node");
			}
			if (std::holds_alternative<OutputNode>(nodes[ref])) {
				throw std::invalid_argument("node " + std::to_string(id) +
				                            ": reads from the output node");
			}
		}
		const AnnNode &node = nodes[id];
		if (const auto *in = std::get_if<InputNode>(&node)) {
			input_count += 1;
			if (in->dim < 1) {
				throw std::invalid_argument("input dimension must be >= 1");
			}
		}
		else if (const auto *d = std::get_if<DenseNode>(&node)) {
			check_matrix(d->weights, id, "weights");
			if (d->weights.cols != node_dim(d->input)) {
				throw std::invalid_argument(
				    "node " + std::to_string(id) +
				    ": dense weight columns do not match the input dimension");
			}
			if (static_cast<int>(d->bias.size()) != d->weights.rows) {
				throw std::invalid_argument(
				    "node " + std::to_string(id) +
				    ": dense bias length does not match the output dimension");
			}
			for (double v : d->bias) {
				if (!std::isfinite(v)) {
					throw std::invalid_argument("node " + std::to_string(id) +
					                            ": bias has non-finite entry");
				}
			}
		}
		else if (const auto *a = std::get_if<ActivationNode>(&node)) {
			if (a->kind == GateKind::mult) {
				throw std::invalid_argument(
				    "node " + std::to_string(id) +
				    ": mult is not an elementwise activation");
			}
		}
		else if (const auto *add = std::get_if<AddNode>(&node)) {
			if (node_dim(add->lhs) != node_dim(add->rhs)) {
				throw std::invalid_argument(
				    "node " + std::to_string(id) +
				    ": add operands have different dimensions");
			}
		}
		else if (const auto *mul = std::get_if<MultiplyNode>(&node)) {
			if (node_dim(mul->lhs) != node_dim(mul->rhs)) {
				throw std::invalid_argument(
				    "node " + std::to_string(id) +
				    ": multiply operands have different dimensions");
			}
		}
		else if (const auto *p = std::get_if<GlobalAvgPoolNode>(&node)) {
			const int in_dim = node_dim(p->input);
			if (p->groups < 1 || in_dim % p->groups != 0) {
				throw std::invalid_argument(
				    "node " + std::to_string(id) +
				    ": pool groups must evenly divide the input dimension");
			}
		}
		else if (const auto *se = std::get_if<SeBlockNode>(&node)) {
			const int trunk = node_dim(se->input);
			check_matrix(se->reduce_weights, id, "reduce weights");
			check_matrix(se->expand_weights, id, "expand weights");
			if (se->pool_groups < 1 || trunk % se->pool_groups != 0) {
				throw std::invalid_argument(
				    "node " + std::to_string(id) +
				    ": SE pool groups must evenly divide the trunk dimension");
			}
			if (se->reduce_weights.cols != se->pool_groups) {
				throw std::invalid_argument(
				    "node " + std::to_string(id) +
				    ": SE reduce weights do not match the pooled dimension");
			}
			if (se->expand_weights.cols != se->reduce_weights.rows ||
			    se->expand_weights.rows != trunk) {
				throw std::invalid_argument(
				    "node " + std::to_string(id) +
				    ": SE expand weights do not match reduce/trunk dimensions");
			}
			if (static_cast<int>(se->reduce_bias.size()) !=
			        se->reduce_weights.rows ||
			    static_cast<int>(se->expand_bias.size()) != trunk) {
				throw std::invalid_argument("node " + std::to_string(id) +
				                            ": SE bias lengths inconsistent");
			}
		}
		else if (std::holds_alternative<OutputNode>(node)) {
			output_count += 1;
		}
	}
	if (input_count != 1) {
		throw std::invalid_argument("graph must have exactly one input node");
	}
	if (output_count != 1) {
		throw std::invalid_argument("graph must have exactly one output node");
	}
	if (output_id < 0 || output_id >= static_cast<int>(nodes.size()) ||
	    !std::holds_alternative<OutputNode>(nodes[output_id])) {
		throw std::invalid_argument("output_id does not name the output node");
	}
}

Vector ann_forward(const AnnGraph &g, const Vector &input)
{
	g.validate();
	if (static_cast<int>(input.size()) != g.input_dim()) {
		throw std::invalid_argument("ann_forward: input dimension mismatch");
	}
	std::vector<Vector> values(g.nodes.size());
	for (int id = 0; id < static_cast<int>(g.nodes.size()); ++id) {
		const AnnNode &node = g.nodes[id];
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
				    for (double &x : v) {
					    x = reference_activation(n.kind, x);
				    }
				    values[id] = std::move(v);
			    }
			    else if constexpr (std::is_same_v<T, AddNode>) {
				    Vector v = values[n.lhs];
				    const Vector &r = values[n.rhs];
				    for (std::size_t k = 0; k < v.size(); ++k) {
					    v[k] += r[k];
				    }
				    values[id] = std::move(v);
			    }
			    else if constexpr (std::is_same_v<T, MultiplyNode>) {
				    Vector v = values[n.lhs];
				    const Vector &r = values[n.rhs];
				    for (std::size_t k = 0; k < v.size(); ++k) {
					    v[k] *= r[k];
				    }
				    values[id] = std::move(v);
			    }
			    else if constexpr (std::is_same_v<T, GlobalAvgPoolNode>) {
				    const Vector &in = values[n.input];
				    const int group_size =
				        static_cast<int>(in.size()) / n.groups;
				    Vector v(n.groups, 0.0);
				    for (int grp = 0; grp < n.groups; ++grp) {
					    double acc = 0.0;
					    for (int k = 0; k < group_size; ++k) {
						    acc += in[static_cast<std::size_t>(grp) *
						                  group_size +
						              k];
					    }
					    v[grp] = acc / group_size;
				    }
				    values[id] = std::move(v);
			    }
			    else if constexpr (std::is_same_v<T, SeBlockNode>) {
				    const Vector &trunk = values[n.input];
				    const int group_size =
				        static_cast<int>(trunk.size()) / n.pool_groups;
				    Vector pooled(n.pool_groups, 0.0);
				    for (int grp = 0; grp < n.pool_groups; ++grp) {
					    double acc = 0.0;
					    for (int k = 0; k < group_size; ++k) {
						    acc += trunk[static_cast<std::size_t>(grp) *
						                     group_size +
						                 k];
					    }
					    pooled[grp] = acc / group_size;
				    }
				    Vector red = matvec(n.reduce_weights, pooled);
				    for (std::size_t k = 0; k < red.size(); ++k) {
					    red[k] = sigmoid(red[k] + n.reduce_bias[k]);
				    }
				    Vector exp = matvec(n.expand_weights, red);
				    Vector v(trunk.size());
				    for (std::size_t k = 0; k < v.size(); ++k) {
					    v[k] = (exp[k] + n.expand_bias[k]) * trunk[k];
				    }
				    values[id] = std::move(v);
			    }
			    else {
				    values[id] = values[n.input];
			    }
		    },
		    node);
	}
	return values[g.output_id];
}

namespace {

/// Rebuilds a graph after dropping the nodes marked dead, remapping every
/// reference through `remap` (remap[i] = new id, or the id of the surviving
/// replacement for dropped nodes).
AnnGraph rebuild(const AnnGraph &g, const std::vector<bool> &dead,
                 std::vector<int> remap)
{
	AnnGraph out;
	for (int id = 0; id < static_cast<int>(g.nodes.size()); ++id) {
		if (dead[id]) {
			continue;
		}
		AnnNode node = g.nodes[id];
		std::visit(
		    [&](auto &n) {
			    using T = std::decay_t<decltype(n)>;
			    if constexpr (std::is_same_v<T, AddNode> ||
			                  std::is_same_v<T, MultiplyNode>) {
				    n.lhs = remap[n.lhs];
				    n.rhs = remap[n.rhs];
			    }
			    else if constexpr (!std::is_same_v<T, InputNode>) {
				    n.input = remap[n.input];
			    }
		    },
		    node);
		out.nodes.push_back(std::move(node));
	}
	out.output_id = remap[g.output_id];
	return out;
}

std::vector<int> consumer_counts(const AnnGraph &g)
{
	std::vector<int> counts(g.nodes.size(), 0);
	for (const auto &node : g.nodes) {
		for (int ref : node_inputs(node)) {
			counts[ref] += 1;
		}
	}
	return counts;
}

/// One simplification pass; returns true if the graph changed.
bool collapse_pass(AnnGraph &g)
{
	const int n = static_cast<int>(g.nodes.size());
	std::vector<int> remap(n);
	for (int i = 0; i < n; ++i) {
		remap[i] = i;
	}
	std::vector<bool> dead(n, false);

	// Drop identity activations by rewiring their consumers.
	for (int id = 0; id < n; ++id) {
		if (const auto *a = std::get_if<ActivationNode>(&g.nodes[id])) {
			if (a->kind == GateKind::identity) {
				dead[id] = true;
				remap[id] = a->input;
			}
		}
	}
	if (std::find(dead.begin(), dead.end(), true) != dead.end()) {
		// Resolve chains of identities before rebuilding.
		for (int id = 0; id < n; ++id) {
			int r = remap[id];
			while (remap[r] != r) {
				r = remap[r];
			}
			remap[id] = r;
		}
		std::vector<int> compact(n, -1);
		int next = 0;
		for (int id = 0; id < n; ++id) {
			if (!dead[id]) {
				compact[id] = next++;
			}
		}
		for (int id = 0; id < n; ++id) {
			remap[id] = compact[remap[id]];
		}
		g = rebuild(g, dead, std::move(remap));
		return true;
	}

	// Fuse Dense(Dense(x)) when the inner dense has a single consumer.
	const auto counts = consumer_counts(g);
	for (int id = 0; id < n; ++id) {
		auto *outer = std::get_if<DenseNode>(&g.nodes[id]);
		if (outer == nullptr) {
			continue;
		}
		auto *inner = std::get_if<DenseNode>(&g.nodes[outer->input]);
		if (inner == nullptr || counts[outer->input] != 1) {
			continue;
		}
		const int inner_id = outer->input;
		Matrix fused_w = matmul(outer->weights, inner->weights);
		Vector fused_b = matvec(outer->weights, inner->bias);
		for (std::size_t k = 0; k < fused_b.size(); ++k) {
			fused_b[k] += outer->bias[k];
		}
		outer->weights = std::move(fused_w);
		outer->bias = std::move(fused_b);
		outer->input = inner->input;
		dead[inner_id] = true;
		std::vector<int> compact(n, -1);
		int next = 0;
		for (int i = 0; i < n; ++i) {
			if (!dead[i]) {
				compact[i] = next++;
			}
		}
		// The inner node is unreferenced after the fuse, so its remap slot
		// is never read.
		for (int i = 0; i < n; ++i) {
			remap[i] = dead[i] ? -1 : compact[i];
		}
		g = rebuild(g, dead, std::move(remap));
		return true;
	}
	return false;
}

}  // namespace

AnnGraph collapse_linear(const AnnGraph &g)
{
	g.validate();
	AnnGraph out = g;
	while (collapse_pass(out)) {
	}
	out.validate();
	return out;
}

AnnGraph expand_se_blocks(const AnnGraph &g)
{
	g.validate();
	AnnGraph out;
	std::vector<int> remap(g.nodes.size(), -1);
	for (int id = 0; id < static_cast<int>(g.nodes.size()); ++id) {
		const AnnNode &node = g.nodes[id];
		if (const auto *se = std::get_if<SeBlockNode>(&node)) {
			const int trunk = remap[se->input];
			const int pool = out.add_global_avg_pool(trunk, se->pool_groups);
			const int red =
			    out.add_dense(pool, se->reduce_weights, se->reduce_bias);
			const int sig = out.add_activation(red, GateKind::sigmoid);
			const int exp =
			    out.add_dense(sig, se->expand_weights, se->expand_bias);
			remap[id] = out.add_multiply(exp, trunk);
			continue;
		}
		AnnNode copy = node;
		std::visit(
		    [&](auto &n) {
			    using T = std::decay_t<decltype(n)>;
			    if constexpr (std::is_same_v<T, AddNode> ||
			                  std::is_same_v<T, MultiplyNode>) {
				    n.lhs = remap[n.lhs];
				    n.rhs = remap[n.rhs];
			    }
			    else if constexpr (!std::is_same_v<T, InputNode>) {
				    n.input = remap[n.input];
			    }
		    },
		    copy);
		out.nodes.push_back(std::move(copy));
		remap[id] = static_cast<int>(out.nodes.size()) - 1;
	}
	out.output_id = remap[g.output_id];
	out.validate();
	return out;
}

}  // namespace amos
