// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "shlk/twiou.hpp"

namespace shlk::tools {

struct TimelineStyle {
  double width = 800.0;   ///< drawing width of the full trajectory
  double row_height = 24.0;
  double margin = 70.0;   ///< left label column
};

/// Two bar rows, ground truth on top and prediction below, one rect per event.
std::string render_timeline_svg(const twiou::Segmentation& gt, const twiou::Segmentation& pred,
                                const TimelineStyle& style = {});

}  // namespace shlk::tools
