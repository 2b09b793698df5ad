#include "dvk/demo_dataset.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "dvk/error.hpp"
#include "dvk/file_util.hpp"
#include "json.hpp"

namespace dvk {
namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

std::size_t DemoDataset::step_count() const {
  std::size_t n = 0;
  for (const auto& d : demos) n += d.steps.size();
  return n;
}

std::shared_ptr<const PatchGrid> DemoDataset::load_frame(const DemoStep& step) const {
  if (step.frame) return step.frame;
  return std::make_shared<const PatchGrid>(read_grid(root / step.frame_ref));
}

namespace {

std::vector<double> read_vector(const ordered_json& record, const char* key,
                                std::size_t line) {
  const auto it = record.find(key);
  if (it == record.end() || !it->is_array()) {
    throw Error(ErrorCode::BadIndex,
                "line " + std::to_string(line) + ": missing array '" + key + "'");
  }
  std::vector<double> out;
  out.reserve(it->size());
  for (const auto& v : *it) {
    if (!v.is_number()) {
      throw Error(ErrorCode::BadIndex,
                  "line " + std::to_string(line) + ": non-numeric '" + key + "'");
    }
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw Error(ErrorCode::NonFiniteValue, key);
    out.push_back(x);
  }
  return out;
}

}  // namespace

DemoDataset read_demos(const fs::path& dir, bool keep_frames) {
  const fs::path index_path = dir / "index.jsonl";
  std::ifstream in(index_path);
  if (!in) throw Error(ErrorCode::MissingIndex, index_path.string());

  DemoDataset dataset;
  dataset.root = dir;
  std::set<std::int64_t> finished_demos;
  std::int64_t current_demo = 0;
  std::int64_t last_t = 0;
  bool have_dims = false;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ordered_json record;
    try {
      record = ordered_json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::BadIndex, "line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!record.is_object() || !record.contains("demo") || !record.contains("t") ||
        !record["demo"].is_number_integer() || !record["t"].is_number_integer() ||
        !record.contains("frame") || !record["frame"].is_string()) {
      throw Error(ErrorCode::BadIndex, "line " + std::to_string(line_no) + ": malformed record");
    }
    const auto demo_id = record["demo"].get<std::int64_t>();
    const auto t = record["t"].get<std::int64_t>();

    DemoStep step;
    step.frame_ref = record["frame"].get<std::string>();
    step.proprio = read_vector(record, "proprio", line_no);
    step.action = read_vector(record, "action", line_no);

    if (!have_dims) {
      dataset.proprio_dim = step.proprio.size();
      dataset.action_dim = step.action.size();
      have_dims = true;
    } else if (step.proprio.size() != dataset.proprio_dim ||
               step.action.size() != dataset.action_dim) {
      throw Error(ErrorCode::DimMismatch,
                  "line " + std::to_string(line_no) + ": step vector lengths differ");
    }

    if (dataset.demos.empty() || demo_id != current_demo) {
      if (!dataset.demos.empty()) finished_demos.insert(current_demo);
      if (finished_demos.count(demo_id)) {
        throw Error(ErrorCode::BadIndex, "records of demo " + std::to_string(demo_id) +
                                             " are not contiguous");
      }
      dataset.demos.emplace_back();
      current_demo = demo_id;
    } else if (t <= last_t) {
      throw Error(ErrorCode::BadIndex, "line " + std::to_string(line_no) + ": t not ascending");
    }
    last_t = t;

    const fs::path frame_path = dir / step.frame_ref;
    if (!fs::is_regular_file(frame_path)) {
      throw Error(ErrorCode::MissingFrame, frame_path.string());
    }
    auto frame = std::make_shared<const PatchGrid>(read_grid(frame_path));
    if (keep_frames) step.frame = std::move(frame);
    dataset.demos.back().steps.push_back(std::move(step));
  }
  return dataset;
}

void write_demos(const DemoDataset& dataset, const fs::path& dir) {
  std::ostringstream index;
  std::set<std::string> dirs_made;
  for (std::size_t d = 0; d < dataset.demos.size(); ++d) {
    const auto& steps = dataset.demos[d].steps;
    for (std::size_t t = 0; t < steps.size(); ++t) {
      const DemoStep& step = steps[t];
      if (!step.frame) {
        throw Error(ErrorCode::InvalidArgument, "write_demos needs resident frames");
      }
      if (step.proprio.size() != dataset.proprio_dim ||
          step.action.size() != dataset.action_dim) {
        throw Error(ErrorCode::DimMismatch, "step vector lengths differ");
      }
      const fs::path frame_path = dir / step.frame_ref;
      const std::string parent = frame_path.parent_path().string();
      if (dirs_made.insert(parent).second) fs::create_directories(frame_path.parent_path());
      write_grid(*step.frame, frame_path);

      ordered_json record;
      record["demo"] = d;
      record["t"] = t;
      record["frame"] = step.frame_ref;
      record["proprio"] = step.proprio;
      record["action"] = step.action;
      index << record.dump() << '\n';
    }
  }
  atomic_write_text(dir / "index.jsonl", index.str());
}

}  // namespace dvk
