// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace amos {

/// A JSON document (unit parameters, graph, network, dataset) does not match
/// the expected schema. Carries the offending node id and field name when
/// the problem can be localized.
class SchemaError : public std::runtime_error {
public:
	explicit SchemaError(const std::string &what, int node_id = -1,
	                     std::string field = {})
	    : std::runtime_error(format(what, node_id, field)),
	      m_node_id(node_id),
	      m_field(std::move(field))
	{
	}

	int node_id() const { return m_node_id; }
	const std::string &field() const { return m_field; }

private:
	static std::string format(const std::string &what, int node_id,
	                          const std::string &field)
	{
		std::string msg = what;
		if (node_id >= 0) {
			msg += " (node " + std::to_string(node_id);
			if (!field.empty()) {
				msg += ", field '" + field + "'";
			}
			msg += ")";
		}
		else if (!field.empty()) {
			msg += " (field '" + field + "')";
		}
		return msg;
	}

	int m_node_id;
	std::string m_field;
};

/// Training produced a non-finite loss. Carries the epoch at which the
/// divergence was detected.
class DivergenceError : public std::runtime_error {
public:
	explicit DivergenceError(int epoch)
	    : std::runtime_error("training diverged (non-finite loss) at epoch " +
	                         std::to_string(epoch)),
	      m_epoch(epoch)
	{
	}

	int epoch() const { return m_epoch; }

private:
	int m_epoch;
};

}  // namespace amos
