#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace bellfit::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kConfigError = 2;
inline constexpr int kIoError = 3;
inline constexpr int kFitError = 4;

/// "0..49" (inclusive) or "3,5,8". Throws InvalidArgument.
std::vector<std::uint64_t> parse_seeds(const std::string& spec);

/// Entry point behind the bellfit executable.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace bellfit::cli
