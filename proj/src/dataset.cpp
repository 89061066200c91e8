#include "seldagger/dataset.hpp"

#include "seldagger/csv.hpp"
#include "seldagger/error.hpp"

#include <cmath>

namespace seldagger {

void Dataset::append(LabeledSample sample) {
  for (double& x : sample.observation.road_features) x = quantize(x);
  for (double& x : sample.observation.speed_history) x = quantize(x);
  sample.expert_action.steering = quantize(sample.expert_action.steering);
  sample.expert_action.speed_cmd = quantize(sample.expert_action.speed_cmd);
  sample.measured_speed = quantize(sample.measured_speed);
  samples_.push_back(std::move(sample));
}

void Dataset::append(const Dataset& other) {
  samples_.insert(samples_.end(), other.samples_.begin(), other.samples_.end());
}

std::vector<std::string> dataset_header(const std::vector<double>& curvature_offsets,
                                        int history) {
  std::vector<std::string> header;
  for (double offset : curvature_offsets) header.push_back("curv_" + fmt_num(offset));
  header.push_back("lateral_offset");
  header.push_back("heading_error");
  for (int k = 0; k < history; ++k) header.push_back("speed_h" + std::to_string(k));
  header.push_back("steering_label");
  header.push_back("speed_label");
  header.push_back("measured_speed");
  header.push_back("class");
  header.push_back("iteration");
  return header;
}

std::string dataset_to_csv(const Dataset& data, const std::vector<double>& curvature_offsets,
                           int history) {
  CsvWriter csv(dataset_header(curvature_offsets, history));
  const std::size_t features = curvature_offsets.size() + 2;
  for (const auto& s : data.samples()) {
    if (s.observation.road_features.size() != features ||
        static_cast<int>(s.observation.speed_history.size()) != history) {
      throw Error(ErrorCode::ShapeMismatch, "sample shape does not match dataset header");
    }
    std::vector<std::string> row;
    for (double x : s.observation.road_features) row.push_back(fmt_num(x));
    for (double x : s.observation.speed_history) row.push_back(fmt_num(x));
    row.push_back(fmt_num(s.expert_action.steering));
    row.push_back(fmt_num(s.expert_action.speed_cmd));
    row.push_back(fmt_num(s.measured_speed));
    row.push_back(std::to_string(static_cast<int>(s.traj_class)));
    row.push_back(std::to_string(s.iteration));
    csv.add_row(std::move(row));
  }
  return csv.str();
}

void save_dataset(const Dataset& data, const std::vector<double>& curvature_offsets,
                  int history, const std::string& path) {
  write_text(path, dataset_to_csv(data, curvature_offsets, history));
}

Dataset dataset_from_csv(const std::string& text, const std::string& source) {
  const CsvTable table = parse_csv(text, source);
  int curvatures = 0;
  int history = 0;
  for (const auto& name : table.header) {
    if (name.rfind("curv_", 0) == 0) ++curvatures;
    if (name.rfind("speed_h", 0) == 0) ++history;
  }
  const std::size_t expected = static_cast<std::size_t>(curvatures) + 2 + history + 5;
  if (table.header.size() != expected || table.column("lateral_offset") != curvatures ||
      table.column("class") < 0 || table.column("iteration") < 0) {
    throw Error(ErrorCode::MalformedFile, source + ":1: unexpected dataset header");
  }
  Dataset data;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const int line = table.line_numbers[r];
    auto num = [&](std::size_t col) { return parse_number(row[col], source, line); };
    LabeledSample s;
    std::size_t col = 0;
    for (int k = 0; k < curvatures + 2; ++k) s.observation.road_features.push_back(num(col++));
    for (int k = 0; k < history; ++k) s.observation.speed_history.push_back(num(col++));
    s.expert_action.steering = num(col++);
    s.expert_action.speed_cmd = num(col++);
    s.measured_speed = num(col++);
    const double cls = num(col++);
    const double iter = num(col++);
    if (cls != std::floor(cls) || cls < 1 || cls > kNumClasses) {
      throw Error(ErrorCode::MalformedFile,
                  source + ":" + std::to_string(line) + ": class must be 1..7");
    }
    if (iter != std::floor(iter) || iter < 0) {
      throw Error(ErrorCode::MalformedFile,
                  source + ":" + std::to_string(line) + ": bad iteration tag");
    }
    s.traj_class = class_from_number(static_cast<int>(cls));
    s.iteration = static_cast<int>(iter);
    data.append(std::move(s));
  }
  return data;
}

Dataset load_dataset(const std::string& path) { return dataset_from_csv(read_text(path), path); }

}  // namespace seldagger
