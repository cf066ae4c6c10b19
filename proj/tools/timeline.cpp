// SPDX-License-Identifier: Apache-2.0
#include "timeline.hpp"

#include <algorithm>
#include <array>
#include <cstdio>

namespace shlk::tools {

namespace {

constexpr std::array<const char*, 6> kPalette = {"#4e79a7", "#f28e2b", "#59a14f",
                                                 "#e15759", "#76b7b2", "#edc948"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

void row(std::string& svg, const twiou::Segmentation& seg, const char* label, double y,
         double scale, const TimelineStyle& st) {
  svg += "  <text x=\"4\" y=\"" + num(y + st.row_height * 0.7) + "\" font-size=\"12\">" + label +
         "</text>\n";
  double start = 0.0;
  for (std::size_t k = 0; k < seg.size(); ++k) {
    const double end = seg.end_times()[k];
    svg += "  <rect class=\"event\" data-start=\"" + num(start) + "\" data-end=\"" + num(end) +
           "\" x=\"" + num(st.margin + start * scale) + "\" y=\"" + num(y) + "\" width=\"" +
           num((end - start) * scale) + "\" height=\"" + num(st.row_height) + "\" fill=\"" +
           kPalette[k % kPalette.size()] + "\" stroke=\"#ffffff\"/>\n";
    start = end;
  }
}

}  // namespace

std::string render_timeline_svg(const twiou::Segmentation& gt, const twiou::Segmentation& pred,
                                const TimelineStyle& st) {
  double length = std::max(gt.end_times().empty() ? 0.0 : gt.end_times().back(),
                           pred.end_times().empty() ? 0.0 : pred.end_times().back());
  if (gt.trajectory_length()) length = std::max(length, *gt.trajectory_length());
  require(length > 0.0, ErrorKind::invalid_argument, "timeline needs a positive trajectory length");
  const double scale = st.width / length;
  const double height = 3.0 * st.row_height + 20.0;

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
                    num(st.margin + st.width + 10.0) + "\" height=\"" + num(height) + "\">\n";
  svg += "  <title>" + escape(gt.id()) + "</title>\n";
  row(svg, gt, "gt", 10.0, scale, st);
  row(svg, pred, "predicted", 20.0 + st.row_height, scale, st);
  svg += "</svg>\n";
  return svg;
}

}  // namespace shlk::tools
