// SPDX-License-Identifier: Apache-2.0

#include "tomo/image_frame.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace tomo {

void normalize_frame(ImageFrame& frame) {
  frame.values = frame.values.cwiseMax(0.0);
  const double peak = frame.values.size() > 0 ? frame.values.maxCoeff() : 0.0;
  if (peak > 0.0) {
    frame.values /= peak;
  } else {
    frame.values.setZero();
  }
}

void write_pgm(std::ostream& out, const ImageFrame& frame) {
  out << "P5\n" << frame.width << ' ' << frame.height << "\n255\n";
  std::vector<unsigned char> row(static_cast<std::size_t>(frame.width));
  for (int v = frame.height - 1; v >= 0; --v) {
    for (int u = 0; u < frame.width; ++u) {
      const double x = std::clamp(frame.at(u, v), 0.0, 1.0);
      row[static_cast<std::size_t>(u)] = static_cast<unsigned char>(std::lround(255.0 * x));
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
}

void save_pgm(const std::filesystem::path& path, const ImageFrame& frame) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_pgm(out, frame);
}

ImageFrame read_pgm(std::istream& in) {
  std::string magic;
  int w = 0;
  int h = 0;
  int maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (magic != "P5" || w <= 0 || h <= 0 || maxval != 255) throw std::runtime_error("read_pgm: unsupported header");
  in.get();
  ImageFrame frame(w, h);
  std::vector<unsigned char> row(static_cast<std::size_t>(w));
  for (int v = h - 1; v >= 0; --v) {
    if (!in.read(reinterpret_cast<char*>(row.data()), w)) throw std::runtime_error("read_pgm: truncated data");
    for (int u = 0; u < w; ++u) frame.at(u, v) = row[static_cast<std::size_t>(u)] / 255.0;
  }
  return frame;
}

std::string frame_to_json(const ImageFrame& frame) {
  nlohmann::json rows = nlohmann::json::array();
  for (int v = 0; v < frame.height; ++v) {
    nlohmann::json row = nlohmann::json::array();
    for (int u = 0; u < frame.width; ++u) row.push_back(frame.at(u, v));
    rows.push_back(std::move(row));
  }
  nlohmann::json j{{"width", frame.width}, {"height", frame.height}, {"timestamp_s", frame.timestamp_s},
                   {"values", std::move(rows)}};
  return j.dump();
}

}  // namespace tomo
