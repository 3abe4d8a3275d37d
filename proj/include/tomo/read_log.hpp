// SPDX-License-Identifier: Apache-2.0
//
// Read logs: CSV (header `timestamp_s,tag_id,antenna_id,channel_index,rss_dbm,phase_rad`)
// or JSON Lines with the same field names. Reals are written with 6 decimals.

#pragma once

#include "tomo/channel_sim.hpp"

#include <filesystem>
#include <iosfwd>
#include <vector>

namespace tomo {

enum class LogFormat { kCsv, kJsonLines };

// `.jsonl` / `.ndjson` select JSON Lines, anything else CSV.
LogFormat log_format_for(const std::filesystem::path& path);

void write_reads_csv(std::ostream& out, const std::vector<TagRead>& reads);
void write_reads_jsonl(std::ostream& out, const std::vector<TagRead>& reads);
std::vector<TagRead> read_reads_csv(std::istream& in);
std::vector<TagRead> read_reads_jsonl(std::istream& in);

void save_reads(const std::filesystem::path& path, const std::vector<TagRead>& reads);
std::vector<TagRead> load_reads(const std::filesystem::path& path);

}  // namespace tomo
