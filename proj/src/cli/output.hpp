#pragma once

// Flat-file emitters: 17-digit CSV and JSON, and plain SVG line plots.

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "g2cone/shoot.hpp"

namespace g2cone::cli {

/// "%.17g"; empty for non-finite values.
std::string format_number(double v);

/// Serializes with every floating value printed to 17 significant digits
/// (non-finite values become null). Object keys are sorted.
std::string dump_json(const nlohmann::json& j, int indent = 2);

inline constexpr const char* kTrajectoryHeader =
    "t,u,A1,A2,B1,B2,alpha1,alpha2,alpha3,alpha4,f,F,F1,F2,F3,F4,F5,G1,G2,beta";

/// Header plus one row per `stride`-th sample (the last sample is always kept).
std::string trajectory_csv(const std::vector<TrajectorySample>& samples, std::size_t stride = 1);

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<PlotSeries> series;
};

/// SVG 1.1 document with axes, tick labels, a legend and one polyline per series.
std::string svg_plot(const PlotSpec& spec);

/// Writes `content` to `path`, creating parent directories.
void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace g2cone::cli
