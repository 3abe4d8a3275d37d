// SPDX-License-Identifier: Apache-2.0

#include "tomo/read_log.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace tomo {
namespace {

constexpr const char* kHeader = "timestamp_s,tag_id,antenna_id,channel_index,rss_dbm,phase_rad";

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  // Avoid "-0.000000".
  if (std::string(buf) == "-0.000000") return "0.000000";
  return buf;
}

double wrap_phase(double phi) {
  double w = std::fmod(phi, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  return w >= kTwoPi ? 0.0 : w;
}

void check_read(const TagRead& r, std::size_t line) {
  if (r.tag_id < 0 || r.antenna_id < 0 || r.channel_index < 0) {
    throw std::runtime_error("read log line " + std::to_string(line) + ": negative index");
  }
}

}  // namespace

LogFormat log_format_for(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  return (ext == ".jsonl" || ext == ".ndjson") ? LogFormat::kJsonLines : LogFormat::kCsv;
}

void write_reads_csv(std::ostream& out, const std::vector<TagRead>& reads) {
  out << kHeader << '\n';
  for (const auto& r : reads) {
    out << fixed6(r.timestamp_s) << ',' << r.tag_id << ',' << r.antenna_id << ',' << r.channel_index << ','
        << fixed6(r.rss_dbm) << ',' << fixed6(r.phase_rad) << '\n';
  }
}

void write_reads_jsonl(std::ostream& out, const std::vector<TagRead>& reads) {
  // Built by hand so that reals keep exactly 6 decimals.
  for (const auto& r : reads) {
    out << "{\"timestamp_s\":" << fixed6(r.timestamp_s) << ",\"tag_id\":" << r.tag_id
        << ",\"antenna_id\":" << r.antenna_id << ",\"channel_index\":" << r.channel_index
        << ",\"rss_dbm\":" << fixed6(r.rss_dbm) << ",\"phase_rad\":" << fixed6(r.phase_rad) << "}\n";
  }
}

std::vector<TagRead> read_reads_csv(std::istream& in) {
  std::vector<TagRead> reads;
  std::string line;
  if (!std::getline(in, line)) return reads;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kHeader) throw std::runtime_error("read log: unexpected CSV header '" + line + "'");
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty() || line == "\r") continue;
    TagRead r;
    char c[5];
    std::istringstream ss(line);
    if (!(ss >> r.timestamp_s >> c[0] >> r.tag_id >> c[1] >> r.antenna_id >> c[2] >> r.channel_index >> c[3] >>
          r.rss_dbm >> c[4] >> r.phase_rad)) {
      throw std::runtime_error("read log line " + std::to_string(n) + ": malformed row");
    }
    r.phase_rad = wrap_phase(r.phase_rad);
    check_read(r, n);
    reads.push_back(r);
  }
  return reads;
}

std::vector<TagRead> read_reads_jsonl(std::istream& in) {
  std::vector<TagRead> reads;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      TagRead r;
      r.timestamp_s = j.at("timestamp_s").get<double>();
      r.tag_id = j.at("tag_id").get<int>();
      r.antenna_id = j.at("antenna_id").get<int>();
      r.channel_index = j.at("channel_index").get<int>();
      r.rss_dbm = j.at("rss_dbm").get<double>();
      r.phase_rad = wrap_phase(j.at("phase_rad").get<double>());
      check_read(r, n);
      reads.push_back(r);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("read log line " + std::to_string(n) + ": " + e.what());
    }
  }
  return reads;
}

void save_reads(const std::filesystem::path& path, const std::vector<TagRead>& reads) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  if (log_format_for(path) == LogFormat::kJsonLines) {
    write_reads_jsonl(out, reads);
  } else {
    write_reads_csv(out, reads);
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<TagRead> load_reads(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open read log " + path.string());
  return log_format_for(path) == LogFormat::kJsonLines ? read_reads_jsonl(in) : read_reads_csv(in);
}

}  // namespace tomo
