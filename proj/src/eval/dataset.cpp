#include "mf/eval/dataset.h"

#include <fstream>
#include <sstream>

#include "mf/error.h"
#include "mf/io/png_io.h"

namespace mf::eval {

Intrinsics read_intrinsics_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open intrinsics file " + path.string());
  Intrinsics K;
  if (!(in >> K.fx >> K.fy >> K.cx >> K.cy >> K.width >> K.height >> K.depth_scale))
    throw Error("malformed intrinsics file " + path.string());
  K.validate();
  return K;
}

GtSequence load_sequence(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  GtSequence seq;
  seq.dir = dir;

  const fs::path manifest = dir / "manifest.txt";
  if (!fs::exists(manifest)) throw Error("missing manifest: " + manifest.string());
  std::ifstream in(manifest);
  std::string line;
  std::vector<fs::path> files;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    files.emplace_back(line);
    if (!fs::exists(dir / line)) throw Error("manifest entry missing on disk: " + line);
  }

  seq.intrinsics = read_intrinsics_file(dir / "intrinsics.txt");

  for (const fs::path& rel : files) {
    const std::string top = rel.begin()->string();
    if (top == "depth") seq.depth_files.push_back(dir / rel);
    else if (top == "color") seq.color_files.push_back(dir / rel);
    else if (top == "mask") seq.mask_files.push_back(dir / rel);
    else if (top == "traj") {
      const std::string body = rel.stem().string();
      seq.trajectories[body] = read_trajectory_file(dir / rel);
    } else if (top == "geometry") {
      seq.geometry[rel.stem().string()] = dir / rel;
    }
  }
  std::sort(seq.depth_files.begin(), seq.depth_files.end());
  std::sort(seq.color_files.begin(), seq.color_files.end());
  std::sort(seq.mask_files.begin(), seq.mask_files.end());

  if (seq.depth_files.size() != seq.color_files.size())
    throw Error("dataset: depth/color frame counts differ");
  seq.frame_count = static_cast<int>(seq.depth_files.size());
  if (seq.frame_count == 0) throw Error("dataset: no frames in " + dir.string());
  return seq;
}

RgbdFrame load_frame(const GtSequence& seq, int t) {
  if (t < 0 || t >= seq.frame_count) throw Error("load_frame: index out of range");
  const Image<uint16_t> raw = read_png_gray16(seq.depth_files[t]);
  ColorImage color = read_png_rgb(seq.color_files[t]);
  if (raw.width() != color.width() || raw.height() != color.height())
    throw Error("load_frame: depth/color dimensions differ at t=" + std::to_string(t));
  DepthImage depth(raw.width(), raw.height(), 0.0f);
  const float scale = static_cast<float>(seq.intrinsics.depth_scale);
  for (size_t i = 0; i < raw.size(); ++i) depth[i] = raw[i] * scale;
  return RgbdFrame::make(t, std::move(color), std::move(depth));
}

LabelImage load_mask(const GtSequence& seq, int t) {
  if (t < 0 || t >= static_cast<int>(seq.mask_files.size()))
    throw Error("load_mask: index out of range");
  return read_png_gray8(seq.mask_files[t]);
}

}  // namespace mf::eval
