#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "selfreg/panel.hpp"

namespace selfreg {

/// Long-format panel file. Header `id,time,signal,excitation`, optionally
/// followed by `signal_true,tau_true,k_true,yeq_true` (simulated panels).
/// Column order is free; unknown columns are rejected. Numbers are written
/// with 17 significant digits so a write/read cycle is exact.
Panel parse_panel_csv(std::istream& in, const std::string& source = "<input>");
Panel read_panel_csv(const std::filesystem::path& path);

void write_panel_csv(const Panel& panel, std::ostream& out);
void write_panel_csv(const Panel& panel, const std::filesystem::path& path);

/// Shortest-safe decimal text for a double (%.17g).
std::string format_number(double x);

}  // namespace selfreg
