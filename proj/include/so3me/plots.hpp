#pragma once

// Static SVG line charts of a trajectory file: phi against time and the three
// omega error components against time. The root <svg> element carries the
// plotted data ranges as data-x-min / data-x-max / data-y-min / data-y-max.

#include <filesystem>
#include <vector>

namespace so3me {

struct PlotFiles {
  std::filesystem::path phi;
  std::filesystem::path omega;
};

/// Writes phi.svg and omega.svg into out_dir (created if missing). Throws
/// IoError for an unreadable, malformed or empty trajectory.
PlotFiles emit_plots(const std::filesystem::path& trajectory, const std::filesystem::path& out_dir);

}  // namespace so3me
