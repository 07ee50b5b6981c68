#pragma once

#include "epicast/ingest.hpp"
#include "epicast/series.hpp"

#include <filesystem>
#include <string>

namespace epicast::plot {

/// Static SVG: actual line, forecast line, and shaded 95%/80% bands.
std::string render_svg(const RegionSeries &actual, const ForecastResult &forecast, const std::string &title = {});

/// `date,kind,value,lo80,hi80,lo95,hi95`, one row per actual point and per forecast step.
std::string render_csv(const RegionSeries &actual, const ForecastResult &forecast);

/// Writes `svg_path` and a sibling `.csv` with the plotted points. Throws IoError.
void emit_plot(const RegionSeries &actual, const ForecastResult &forecast, const std::filesystem::path &svg_path,
               const std::string &title = {});

} // namespace epicast::plot
