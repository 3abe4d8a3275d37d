// SPDX-License-Identifier: Apache-2.0

#include "tomo/tracking.hpp"

#include "tomo/preprocess.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace tomo {
namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

ImageFrame median_frame(std::span<const ImageFrame> frames) {
  if (frames.empty()) throw std::invalid_argument("median_frame: no frames");
  const ImageFrame& first = frames.front();
  for (const ImageFrame& f : frames) {
    if (f.width != first.width || f.height != first.height) {
      throw std::invalid_argument("median_frame: frames differ in size");
    }
  }
  ImageFrame out(first.width, first.height);
  out.timestamp_s = frames.back().timestamp_s;
  std::vector<double> v(frames.size());
  for (int j = 0; j < out.size(); ++j) {
    for (std::size_t i = 0; i < frames.size(); ++i) v[i] = frames[i].values[j];
    out.values[j] = median_of(v);
  }
  return out;
}

std::vector<Blob> label_blobs(const ImageFrame& frame, double threshold, int min_area) {
  const int w = frame.width;
  const int h = frame.height;
  const auto fg = [&](int p) { return frame.values[p] >= threshold && frame.values[p] > 0.0; };
  std::vector<int> label(static_cast<std::size_t>(w * h), -1);
  std::vector<Blob> blobs;
  std::vector<int> stack;
  int next = 0;
  for (int start = 0; start < w * h; ++start) {
    if (label[static_cast<std::size_t>(start)] >= 0 || !fg(start)) continue;
    Blob blob;
    blob.min_u = blob.max_u = start % w;
    blob.min_v = blob.max_v = start / w;
    double su = 0.0;
    double sv = 0.0;
    label[static_cast<std::size_t>(start)] = next;
    stack.assign(1, start);
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      const int u = p % w;
      const int v = p / w;
      ++blob.area;
      su += u;
      sv += v;
      blob.min_u = std::min(blob.min_u, u);
      blob.max_u = std::max(blob.max_u, u);
      blob.min_v = std::min(blob.min_v, v);
      blob.max_v = std::max(blob.max_v, v);
      for (int dv = -1; dv <= 1; ++dv) {
        for (int du = -1; du <= 1; ++du) {
          const int uu = u + du;
          const int vv = v + dv;
          if (uu < 0 || uu >= w || vv < 0 || vv >= h) continue;
          const int q = vv * w + uu;
          if (label[static_cast<std::size_t>(q)] >= 0 || !fg(q)) continue;
          label[static_cast<std::size_t>(q)] = next;
          stack.push_back(q);
        }
      }
    }
    ++next;
    if (blob.area < min_area) continue;
    blob.centroid = Eigen::Vector2d(su / blob.area, sv / blob.area);
    blobs.push_back(blob);
  }
  return blobs;
}

std::vector<Blob> detect_blobs(std::span<const ImageFrame> frames, const BlobParams& params) {
  if (static_cast<int>(frames.size()) < params.buffer_frames || frames.empty()) return {};
  const ImageFrame median = median_frame(frames.last(static_cast<std::size_t>(params.buffer_frames)));
  return label_blobs(median, params.threshold, params.min_area);
}

BlobTracker::BlobTracker(BlobParams params) : params_(params) {
  if (params_.buffer_frames < 1) throw std::invalid_argument("BlobTracker: buffer must hold at least one frame");
  if (params_.background_frames < 0) throw std::invalid_argument("BlobTracker: background frame count must be >= 0");
}

std::vector<Blob> BlobTracker::push(const ImageFrame& frame) {
  if (!background_ready()) {
    if (!background_) {
      background_ = ImageFrame(frame.width, frame.height);
    } else if (background_->width != frame.width || background_->height != frame.height) {
      throw std::invalid_argument("BlobTracker: frame size changed");
    }
    ++background_count_;
    background_->values += (frame.values - background_->values) / background_count_;
    return {};
  }
  ImageFrame fg = frame;
  if (background_) {
    if (background_->width != frame.width || background_->height != frame.height) {
      throw std::invalid_argument("BlobTracker: frame size changed");
    }
    fg.values = (frame.values - background_->values).cwiseMax(0.0);
  }
  buffer_.push_back(std::move(fg));
  while (static_cast<int>(buffer_.size()) > params_.buffer_frames) buffer_.pop_front();
  const std::vector<ImageFrame> frames(buffer_.begin(), buffer_.end());
  return detect_blobs(frames, params_);
}

std::vector<int> proximate_categories(const Blob& blob, const CategoryLayout& layout, double eta2) {
  std::vector<int> out;
  for (int j = 0; j < layout.size(); ++j) {
    if ((blob.centroid - layout.centroid(j)).norm() <= eta2) out.push_back(j);
  }
  return out;
}

std::vector<int> update_popularity(std::span<const Blob> blobs, const CategoryLayout& layout, double eta2,
                                   PopularityScores& scores) {
  if (scores.size() != layout.size()) throw std::invalid_argument("update_popularity: score size mismatch");
  std::vector<int> delta(static_cast<std::size_t>(layout.size()), 0);
  for (const Blob& blob : blobs) {
    for (int j : proximate_categories(blob, layout, eta2)) {
      scores.increment(j);
      ++delta[static_cast<std::size_t>(j)];
    }
  }
  return delta;
}

EvalReport evaluate(std::span<const WindowOutcome> windows) {
  if (windows.empty()) throw std::invalid_argument("evaluate: no evaluation windows");
  int tp = 0;
  int fp = 0;
  for (const WindowOutcome& w : windows) {
    const auto scored = [&](int id) { return std::find(w.scored.begin(), w.scored.end(), id) != w.scored.end(); };
    const auto tested = [&](int id) { return std::find(w.tested.begin(), w.tested.end(), id) != w.tested.end(); };
    if (std::all_of(w.tested.begin(), w.tested.end(), scored)) ++tp;
    if (std::any_of(w.scored.begin(), w.scored.end(), [&](int id) { return !tested(id); })) ++fp;
  }
  EvalReport r;
  r.windows = static_cast<int>(windows.size());
  r.tpr = static_cast<double>(tp) / r.windows;
  r.fpr = static_cast<double>(fp) / r.windows;
  r.mr = 1.0 - r.tpr;
  return r;
}

void write_report_csv(std::ostream& out, std::span<const EvalRow> rows) {
  out << "scenario,k_cw,training_users,tpr,fpr,mr\n";
  for (const EvalRow& r : rows) {
    out << r.scenario << ',' << r.k_cw << ',' << r.training_users << ',' << fixed(r.tpr, 4) << ',' << fixed(r.fpr, 4)
        << ',' << fixed(r.mr, 4) << '\n';
  }
}

void write_report_table(std::ostream& out, std::span<const EvalRow> rows) {
  std::size_t name_w = 8;
  for (const EvalRow& r : rows) name_w = std::max(name_w, r.scenario.size());
  char line[256];
  std::snprintf(line, sizeof line, "%-*s  %4s  %5s  %7s  %6s  %6s  %6s\n", static_cast<int>(name_w), "scenario",
                "k_cw", "users", "windows", "TPR", "FPR", "MR");
  out << line;
  for (const EvalRow& r : rows) {
    std::snprintf(line, sizeof line, "%-*s  %4d  %5d  %7d  %6.3f  %6.3f  %6.3f\n", static_cast<int>(name_w),
                  r.scenario.c_str(), r.k_cw, r.training_users, r.windows, r.tpr, r.fpr, r.mr);
    out << line;
  }
}

std::string score_json_line(double timestamp_s, std::span<const Blob> blobs, const PopularityScores& scores,
                            const CategoryLayout& layout) {
  std::string s = "{\"timestamp_s\":" + fixed(timestamp_s, 3) + ",\"blobs\":[";
  for (std::size_t i = 0; i < blobs.size(); ++i) {
    if (i > 0) s += ',';
    s += "{\"area\":" + std::to_string(blobs[i].area) + ",\"u\":" + fixed(blobs[i].centroid.x(), 3) +
         ",\"v\":" + fixed(blobs[i].centroid.y(), 3) + '}';
  }
  s += "],\"scores\":{";
  for (int j = 0; j < layout.size(); ++j) {
    if (j > 0) s += ',';
    s += '"' + std::to_string(layout.category(j).id) + "\":" + std::to_string(scores.count(j));
  }
  s += "}}";
  return s;
}

}  // namespace tomo
