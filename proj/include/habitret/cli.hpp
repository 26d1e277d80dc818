#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>

#include "habitret/model.hpp"

namespace habitret::cli {

inline constexpr std::string_view kVersion = "0.1.0";

/// Everything that determines a run's outputs. The output directory is
/// recorded but excluded from the hash.
struct RunManifest {
  ModelParams params;
  std::string command;
  double tau = 0.0;
  double grid_step = 0.5;
  std::size_t paths = 0;
  double dt = 0.0;
  std::uint64_t seed = 0;
  std::size_t record = 0;
  std::string scheme;
  std::string only;
  double dy = 0.0;
  double dtau = 0.0;
  std::string out_dir;

  /// Canonical `key=value` lines (values at 17 significant digits).
  std::string canonical() const;
  /// FNV-1a 64 of canonical(), as 16 hex digits.
  std::string hash() const;
};

std::uint64_t fnv1a64(std::string_view bytes);

/// 12 significant digits, '.' decimal point.
std::string format_number(double x);

/// Entry point behind the `habitret` executable. Exit codes: 0 success,
/// 1 usage or configuration error, 2 infeasible model.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace habitret::cli
