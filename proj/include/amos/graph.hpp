// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <variant>
#include <vector>

#include "amos/unit.hpp"

namespace amos {

/// Small dense row-major matrix. The toolkit works at desk scale, so no
/// linear-algebra library is pulled in.
struct Matrix {
	int rows = 0;
	int cols = 0;
	std::vector<double> data;

	Matrix() = default;
	Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

	double operator()(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
	double &operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }

	static Matrix identity(int n);
};

using Vector = std::vector<double>;

Vector matvec(const Matrix &m, const Vector &v);
Matrix matmul(const Matrix &a, const Matrix &b);

// Graph nodes. Nodes refer to predecessors by index into AnnGraph::nodes;
// a valid graph lists every node after all of its predecessors.
struct InputNode {
	int dim = 0;
};
struct DenseNode {
	int input = -1;
	Matrix weights;  // rows = output dim, cols = input dim
	Vector bias;     // length = output dim
};
struct ActivationNode {
	int input = -1;
	GateKind kind = GateKind::relu;  // relu, sigmoid, swish or identity
};
struct AddNode {
	int lhs = -1;
	int rhs = -1;
};
struct MultiplyNode {
	int lhs = -1;
	int rhs = -1;
};
/// Splits the input into `groups` equal contiguous groups and outputs the
/// mean of each group; output dimension = groups.
struct GlobalAvgPoolNode {
	int input = -1;
	int groups = 1;
};
/// Squeeze-and-excitation macro: pool -> reduce Dense -> sigmoid ->
/// expand Dense -> multiply against the trunk. Expanded to primitive nodes
/// before compilation.
struct SeBlockNode {
	int input = -1;
	int pool_groups = 1;  // groups of the internal average pool
	Matrix reduce_weights;
	Vector reduce_bias;
	Matrix expand_weights;
	Vector expand_bias;
};
struct OutputNode {
	int input = -1;
};

using AnnNode = std::variant<InputNode, DenseNode, ActivationNode, AddNode,
                             MultiplyNode, GlobalAvgPoolNode, SeBlockNode,
                             OutputNode>;

/// A layered feedforward ANN. Immutable once built (the builder methods are
/// for construction only).
struct AnnGraph {
	std::vector<AnnNode> nodes;
	int output_id = -1;

	// Construction helpers; each returns the new node's id.
	int add_input(int dim);
	int add_dense(int input, Matrix weights, Vector bias);
	int add_activation(int input, GateKind kind);
	int add_add(int lhs, int rhs);
	int add_multiply(int lhs, int rhs);
	int add_global_avg_pool(int input, int groups);
	int add_se_block(int input, int pool_groups, Matrix reduce_w,
	                 Vector reduce_b, Matrix expand_w, Vector expand_b);
	void set_output(int input);

	int input_dim() const;
	/// Output dimension of a node; requires a structurally valid prefix.
	int node_dim(int id) const;
	/// Throws std::invalid_argument describing the first violation found:
	/// missing/duplicate input, forward references, dimension mismatches.
	void validate() const;
};

/// Exact reference evaluation in node order.
Vector ann_forward(const AnnGraph &g, const Vector &input);

/// Removes identity activations and fuses chains of Dense nodes
/// (W2*(W1*x + b1) + b2 == (W2*W1)*x + (W2*b1 + b2)) whenever the inner
/// node has a single consumer. Output values are preserved up to
/// floating-point reassociation.
AnnGraph collapse_linear(const AnnGraph &g);

/// Replaces every SeBlock macro node with its primitive nodes.
AnnGraph expand_se_blocks(const AnnGraph &g);

}  // namespace amos
