// SPDX-License-Identifier: Apache-2.0
#include "amos/cli.hpp"

int main(int argc, char **argv)
{
	return amos::run_cli(argc, argv);
}
