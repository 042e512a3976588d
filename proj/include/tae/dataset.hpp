#pragma once

// OTB-style sequence ingestion: <seq>/img/0001.png frames, one
// "x,y,w,h" ground-truth line per frame, optional attributes.txt, and
// train.txt / test.txt split lists at the dataset root.

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tae/bbox.hpp"
#include "tae/image_io.hpp"

namespace tae {

inline constexpr std::size_t kAttributeCount = 12;

struct SequenceRecord {
  std::string id;
  std::filesystem::path dir;
  std::vector<std::filesystem::path> frames;
  std::vector<std::optional<BBox>> boxes;  // nullopt marks an absent target
  std::vector<bool> attributes;            // empty or kAttributeCount flags
  std::string split;
};

namespace detail {

inline std::vector<std::string> split_fields(std::string line) {
  std::replace(line.begin(), line.end(), '\t', ',');
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

inline std::optional<BBox> parse_gt_line(const std::string& line, const std::string& seq_id,
                                         std::size_t line_no) {
  const auto fields = split_fields(line);
  if (fields.size() != 4) {
    throw std::runtime_error("sequence '" + seq_id + "' line " + std::to_string(line_no) +
                             ": expected 4 comma-separated values, got '" + line + "'");
  }
  BBox b;
  try {
    b.x = std::stod(fields[0]);
    b.y = std::stod(fields[1]);
    b.w = std::stod(fields[2]);
    b.h = std::stod(fields[3]);
  } catch (const std::exception&) {
    throw std::runtime_error("sequence '" + seq_id + "' line " + std::to_string(line_no) +
                             ": unparseable box '" + line + "'");
  }
  if (b.x == 0.0 && b.y == 0.0 && b.w == 0.0 && b.h == 0.0) return std::nullopt;  // absent marker
  if (!b.valid()) {
    throw std::runtime_error("sequence '" + seq_id + "' line " + std::to_string(line_no) +
                             ": degenerate box '" + line + "'");
  }
  return b;
}

// Numeric value of the stem for frame ordering; files without a numeric
// stem sort after numbered ones by name.
inline long frame_number(const std::filesystem::path& p) {
  const std::string stem = p.stem().string();
  if (stem.empty() || !std::all_of(stem.begin(), stem.end(),
                                   [](unsigned char c) { return std::isdigit(c); })) {
    return -1;
  }
  return std::stol(stem);
}

}  // namespace detail

inline SequenceRecord load_sequence(const std::filesystem::path& dir, const std::string& split) {
  SequenceRecord rec;
  rec.id = dir.filename().string();
  rec.dir = dir;
  rec.split = split;

  const std::filesystem::path img_dir = dir / "img";
  if (!std::filesystem::is_directory(img_dir)) {
    throw std::runtime_error("sequence '" + rec.id + "': missing img/ directory");
  }
  for (const auto& entry : std::filesystem::directory_iterator(img_dir)) {
    if (entry.is_regular_file() && is_image_file(entry.path())) rec.frames.push_back(entry.path());
  }
  std::sort(rec.frames.begin(), rec.frames.end(), [](const auto& a, const auto& b) {
    const long na = detail::frame_number(a), nb = detail::frame_number(b);
    if (na != nb) return na < nb;
    return a.filename().string() < b.filename().string();
  });
  if (rec.frames.empty()) throw std::runtime_error("sequence '" + rec.id + "': no frames in img/");

  const std::filesystem::path gt_path = dir / "groundtruth_rect.txt";
  std::ifstream gt(gt_path);
  if (!gt) throw std::runtime_error("sequence '" + rec.id + "': missing groundtruth_rect.txt");
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(gt, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    rec.boxes.push_back(detail::parse_gt_line(line, rec.id, line_no));
  }
  if (rec.boxes.size() != rec.frames.size()) {
    throw std::runtime_error("sequence '" + rec.id + "': " + std::to_string(rec.frames.size()) +
                             " frames but " + std::to_string(rec.boxes.size()) +
                             " ground-truth lines");
  }

  // boxes entirely outside the frame are rejected at ingestion
  const auto [fw, fh] = read_image_size(rec.frames.front());
  for (std::size_t i = 0; i < rec.boxes.size(); ++i) {
    if (rec.boxes[i] && !intersects_frame(*rec.boxes[i], fw, fh)) {
      throw std::runtime_error("sequence '" + rec.id + "' line " + std::to_string(i + 1) +
                               ": box entirely outside the " + std::to_string(fw) + "x" +
                               std::to_string(fh) + " frame");
    }
  }

  const std::filesystem::path attr_path = dir / "attributes.txt";
  if (std::filesystem::exists(attr_path)) {
    std::ifstream af(attr_path);
    std::string attr_line;
    std::getline(af, attr_line);
    const auto fields = detail::split_fields(attr_line);
    if (fields.size() != kAttributeCount) {
      throw std::runtime_error("sequence '" + rec.id + "': attributes.txt must carry " +
                               std::to_string(kAttributeCount) + " flags");
    }
    for (const auto& f : fields) rec.attributes.push_back(f.find('1') != std::string::npos);
  }
  return rec;
}

inline std::vector<SequenceRecord> load_dataset(const std::filesystem::path& root,
                                                const std::string& split) {
  if (split != "train" && split != "test") {
    throw std::invalid_argument("load_dataset: split must be 'train' or 'test'");
  }
  const std::filesystem::path list_path = root / (split + ".txt");
  std::ifstream list(list_path);
  if (!list) throw std::runtime_error("dataset: missing split list " + list_path.string());

  std::vector<std::string> ids;
  std::string line;
  while (std::getline(list, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) ids.push_back(line);
  }
  std::sort(ids.begin(), ids.end());

  std::vector<SequenceRecord> records;
  records.reserve(ids.size());
  for (const auto& id : ids) records.push_back(load_sequence(root / id, split));
  return records;
}

}  // namespace tae
