#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace patlim::cli {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitValidation = 2;
constexpr int kExitBudget = 3;

const char* version();

// args excludes the program name.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

std::uint32_t crc32_file(const std::string& path);

}  // namespace patlim::cli
