// SPDX-License-Identifier: Apache-2.0
#include "shlk/twiou.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace shlk::twiou {

std::string_view to_string(TimeUnit u) { return u == TimeUnit::frames ? "frames" : "seconds"; }

TimeUnit unit_from_string(std::string_view s) {
  if (s == "frames") return TimeUnit::frames;
  if (s == "seconds") return TimeUnit::seconds;
  fail(ErrorKind::parse, "unknown time unit '" + std::string(s) + "'");
}

Segmentation::Segmentation(std::vector<double> end_times, TimeUnit unit, std::string id,
                           std::optional<double> trajectory_length)
    : end_times_(std::move(end_times)), unit_(unit), id_(std::move(id)),
      length_(trajectory_length) {
  require(!end_times_.empty(), ErrorKind::validation, "segmentation '" + id_ + "' is empty");
  double prev = 0.0;
  for (std::size_t k = 0; k < end_times_.size(); ++k) {
    const double t = end_times_[k];
    require(std::isfinite(t), ErrorKind::non_finite, "segmentation '" + id_ + "' has a non-finite end-time");
    require(t > prev, ErrorKind::validation,
            "segmentation '" + id_ + "' end-times must be strictly increasing and positive (index " +
                std::to_string(k) + ")");
    prev = t;
  }
  if (length_) {
    require(end_times_.back() <= *length_, ErrorKind::validation,
            "segmentation '" + id_ + "' ends after the trajectory length");
  }
}

Segmentation Segmentation::scaled(double k) const {
  require(k > 0.0, ErrorKind::invalid_argument, "scale must be positive");
  std::vector<double> t = end_times_;
  for (double& v : t) v *= k;
  std::optional<double> len;
  if (length_) len = *length_ * k;
  return Segmentation(std::move(t), unit_, id_, len);
}

nlohmann::json to_json(const Segmentation& s) {
  nlohmann::json j;
  j["id"] = s.id();
  j["unit"] = std::string(to_string(s.unit()));
  j["end_times"] = s.end_times();
  if (s.trajectory_length()) j["length"] = *s.trajectory_length();
  return j;
}

Segmentation segmentation_from_json(const nlohmann::json& j) {
  try {
    std::optional<double> len;
    if (j.contains("length")) len = j.at("length").get<double>();
    return Segmentation(j.at("end_times").get<std::vector<double>>(),
                        unit_from_string(j.value("unit", std::string("frames"))),
                        j.value("id", std::string()), len);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse, std::string("malformed segmentation: ") + e.what());
  }
}

TwIouReport tw_iou(const Segmentation& pred, const Segmentation& gt) {
  require(!pred.end_times().empty() && !gt.end_times().empty(), ErrorKind::validation,
          "tw_iou on an empty segmentation");
  require(pred.unit() == gt.unit(), ErrorKind::validation,
          "time units differ between prediction and ground truth");

  const auto& x = pred.end_times();
  const auto& t = gt.end_times();
  Matrix c(x.size(), t.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < t.size(); ++j) c(i, j) = std::abs(x[i] - t[j]);
  }

  TwIouReport report;
  report.alignment = align::dtw(align::CostMatrix(std::move(c))).path;

  // Group predictions per gt event. A prediction paired with several gt events
  // joins each of those groups once.
  std::vector<std::vector<std::size_t>> groups(t.size());
  for (const auto& [i, j] : report.alignment.steps) {
    auto& g = groups[j];
    if (g.empty() || g.back() != i) g.push_back(i);
  }

  report.per_gt_terms.reserve(t.size());
  for (std::size_t j = 0; j < t.size(); ++j) {
    const double t_start = j == 0 ? 0.0 : t[j - 1];
    const double t_end = t[j];
    double inter = 0.0;
    double hi = -std::numeric_limits<double>::infinity();
    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t i : groups[j]) {
      const double x_start = i == 0 ? 0.0 : x[i - 1];
      const double x_end = x[i];
      inter += std::max(0.0, std::min(t_end, x_end) - std::max(t_start, x_start));
      hi = std::max(hi, std::max(t_end, x_end));
      lo = std::min(lo, std::min(t_start, x_start));
    }
    GtTerm term;
    term.gt_index = j;
    term.intersection = inter;
    term.union_ = hi - lo;
    term.ratio = term.union_ > 0.0 ? std::clamp(inter / term.union_, 0.0, 1.0) : 0.0;
    term.predicted = groups[j];
    report.raw_sum += term.ratio;
    report.per_gt_terms.push_back(std::move(term));
  }
  report.normalized = report.raw_sum / static_cast<double>(t.size());
  return report;
}

std::pair<double, double> mean_std(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  double sum = 0.0;
  for (double v : xs) sum += v;
  const double mean = sum / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double v : xs) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(xs.size()))};
}

DatasetScore tw_iou_dataset(const std::vector<Segmentation>& preds,
                            const std::vector<Segmentation>& gts) {
  require(preds.size() == gts.size(), ErrorKind::dimension_mismatch,
          "prediction and ground-truth lists differ in length (" + std::to_string(preds.size()) +
              " vs " + std::to_string(gts.size()) + ")");
  DatasetScore out;
  out.per_item.reserve(preds.size());
  for (std::size_t k = 0; k < preds.size(); ++k) {
    out.per_item.push_back(tw_iou(preds[k], gts[k]).normalized);
  }
  const auto [m, s] = mean_std(out.per_item);
  out.mean = 100.0 * m;
  out.std = 100.0 * s;
  return out;
}

}  // namespace shlk::twiou
