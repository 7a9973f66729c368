#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "ftls/io/spec.hpp"
#include "ftls/io/table.hpp"

namespace ftls::io {

struct FigureTarget {
    std::string name;
    std::string description;
    std::vector<std::string> panels;  ///< e.g. "left", "right"; empty for single-panel targets
};

/// Every named target. Panel aliases are "<name>-<panel>".
const std::vector<FigureTarget>& figure_targets();

/// True for a target name or a panel alias.
bool is_figure_target(std::string_view name);

/// Writes the data behind one figure (or one panel of it) into `dir` and
/// records artifacts and summary values in `manifest`. Model parameters, the
/// flux level and the grid come from `spec`; a case-2 target swaps the speed
/// limits so that V^- < V^+.
void reproduce_figure(const ExperimentSpec& spec, std::string_view target, const std::filesystem::path& dir,
                      Manifest& manifest);

}  // namespace ftls::io
