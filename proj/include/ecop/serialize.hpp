#pragma once

#include <string>

#include "ecop/cmdp.hpp"

namespace ecop {

// Text format for CMDP instances (JSON object, doubles printed with the
// shortest representation that parses back to the same value, so a
// write/read/write cycle is byte-identical).
std::string cmdp_to_text(const EpisodicCmdp& m);
EpisodicCmdp cmdp_from_text(const std::string& text);

void save_cmdp(const EpisodicCmdp& m, const std::string& path);
EpisodicCmdp load_cmdp(const std::string& path);

// Shortest round-trip decimal form of a double (used in CSV emission).
std::string format_value(double v);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace ecop
