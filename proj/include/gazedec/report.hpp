#pragma once

#include <filesystem>

#include "gazedec/evaluation.hpp"

namespace gazedec {

/// Heatmap of the robustness grid: one rect per region, mean error printed
/// in white and benefit count in yellow. Hand-emitted SVG, no dependencies.
void write_grid_svg(const GridReport& rep, const std::filesystem::path& path);

}  // namespace gazedec
