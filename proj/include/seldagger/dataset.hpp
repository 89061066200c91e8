#pragma once

#include "seldagger/observation.hpp"

#include <span>
#include <string>
#include <vector>

namespace seldagger {

/// Append-only sample store. Values are quantized to their 9-significant-
/// digit CSV form on insertion, so an in-memory dataset and its file are
/// interchangeable.
class Dataset {
 public:
  void append(LabeledSample sample);
  void append(const Dataset& other);

  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  const LabeledSample& operator[](std::size_t i) const { return samples_[i]; }
  std::span<const LabeledSample> samples() const { return samples_; }

  /// Replaces the stored class of sample `i` (relabeling after retraining).
  void set_class(std::size_t i, TrajectoryClass c) { samples_[i].traj_class = c; }

  bool operator==(const Dataset&) const = default;

 private:
  std::vector<LabeledSample> samples_;
};

/// Column names for K curvature offsets and H history entries.
std::vector<std::string> dataset_header(const std::vector<double>& curvature_offsets,
                                        int history);

std::string dataset_to_csv(const Dataset& data, const std::vector<double>& curvature_offsets,
                           int history);
void save_dataset(const Dataset& data, const std::vector<double>& curvature_offsets,
                  int history, const std::string& path);
Dataset dataset_from_csv(const std::string& text, const std::string& source);
Dataset load_dataset(const std::string& path);

}  // namespace seldagger
