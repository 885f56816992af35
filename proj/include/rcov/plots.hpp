#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "rcov/simulation.hpp"

namespace rcov {

struct PlotOptions {
  // Base marker; inferred from charging rows of the trace when absent.
  std::optional<Vec2> base;
  double base_radius = 0.15;
  std::vector<VoronoiCell> final_cells;
};

/// Writes trajectory.svg, soc.svg and coverage_cost.svg into `outdir` and
/// returns their paths. Throws InvalidArgument on an empty trace.
std::vector<std::filesystem::path> render_plots(const std::vector<TraceRecord>& traces,
                                                const std::vector<Event>& events,
                                                const std::filesystem::path& outdir,
                                                const PlotOptions& options = {});

}  // namespace rcov
