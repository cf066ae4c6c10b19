// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "shlk/align.hpp"

namespace shlk::twiou {

enum class TimeUnit { frames, seconds };

std::string_view to_string(TimeUnit u);
TimeUnit unit_from_string(std::string_view s);

/// Strictly increasing positive event end-times; each event starts where the previous ends,
/// the first at 0.
class Segmentation {
 public:
  Segmentation() = default;
  Segmentation(std::vector<double> end_times, TimeUnit unit = TimeUnit::frames,
               std::string id = {}, std::optional<double> trajectory_length = std::nullopt);

  const std::vector<double>& end_times() const noexcept { return end_times_; }
  TimeUnit unit() const noexcept { return unit_; }
  const std::string& id() const noexcept { return id_; }
  const std::optional<double>& trajectory_length() const noexcept { return length_; }
  std::size_t size() const noexcept { return end_times_.size(); }

  /// Same events with every end-time multiplied by k > 0.
  Segmentation scaled(double k) const;

  friend bool operator==(const Segmentation&, const Segmentation&) = default;

 private:
  std::vector<double> end_times_;
  TimeUnit unit_ = TimeUnit::frames;
  std::string id_;
  std::optional<double> length_;
};

nlohmann::json to_json(const Segmentation& s);
Segmentation segmentation_from_json(const nlohmann::json& j);

struct GtTerm {
  std::size_t gt_index = 0;
  double intersection = 0.0;
  double union_ = 0.0;
  double ratio = 0.0;
  std::vector<std::size_t> predicted;  ///< prediction indices grouped onto this gt event
};

struct TwIouReport {
  double raw_sum = 0.0;
  double normalized = 0.0;
  std::vector<GtTerm> per_gt_terms;
  align::AlignmentPath alignment;
};

TwIouReport tw_iou(const Segmentation& pred, const Segmentation& gt);

struct DatasetScore {
  double mean = 0.0;  ///< x100
  double std = 0.0;   ///< population std, x100
  std::vector<double> per_item;  ///< normalized, in [0, 1]
};

DatasetScore tw_iou_dataset(const std::vector<Segmentation>& preds,
                            const std::vector<Segmentation>& gts);

/// Population mean and standard deviation of `xs`.
std::pair<double, double> mean_std(const std::vector<double>& xs);

}  // namespace shlk::twiou
