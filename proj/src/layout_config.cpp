// SPDX-License-Identifier: Apache-2.0

#include "tomo/layout_config.hpp"

#include <boost/algorithm/string.hpp>
#include <boost/lexical_cast.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace tomo {
namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"layout",
       {"k_x", "k_y", "spacing_m", "spacing_y_m", "origin", "antenna_positions", "z_planes", "p_x", "p_y",
        "categories"}},
      {"channel",
       {"tx_power_dbm", "antenna_gain_db", "tag_gain_db", "backscatter_loss_db", "env_constant_db",
        "baseline_exponent", "noise_sigma_db", "cable_phase_offset_rad", "tag_backscatter_phase_rad",
        "multipath_phase_sigma_rad", "first_channel_hz", "channel_step_hz", "channels", "rate_per_s",
        "reads_per_cycle"}},
      {"monitor", {"buffer_reads", "tick_period_s", "phase_threshold_rad", "power_threshold"}},
      {"imaging", {"alpha", "theta0", "c_n", "c_x", "delta_vox"}},
      {"dnn", {"ensemble", "epochs", "l2", "learning_rate", "batch_size", "retain", "max_rss", "seed"}},
      {"window", {"k_cw", "median_kernel", "average_kernel", "merge", "sample_outside"}},
      {"tracking", {"eta2", "threshold", "min_blob_area", "buffer_frames", "background_frames"}},
  };
  return keys;
}

std::vector<double> parse_numbers(const std::string& text, const std::string& key) {
  std::string s = text;
  std::replace(s.begin(), s.end(), ',', ' ');
  std::istringstream in(s);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw std::invalid_argument("config: '" + key + "' has a non-numeric value '" + tok + "'");
    }
  }
  return out;
}

Point3 parse_point(const std::string& text, const std::string& key) {
  const std::vector<double> v = parse_numbers(text, key);
  if (v.size() != 3) throw std::invalid_argument("config: '" + key + "' needs three coordinates");
  return Point3(v[0], v[1], v[2]);
}

template <typename T>
T get(const pt::ptree& tree, const std::string& path, T fallback) {
  const auto node = tree.get_optional<std::string>(path);
  if (!node) return fallback;
  try {
    return boost::lexical_cast<T>(boost::trim_copy(*node));
  } catch (const boost::bad_lexical_cast&) {
    throw std::invalid_argument("config: cannot parse '" + path + "' = '" + *node + "'");
  }
}

bool get_bool(const pt::ptree& tree, const std::string& path, bool fallback) {
  const auto node = tree.get_optional<std::string>(path);
  if (!node) return fallback;
  const std::string v = boost::to_lower_copy(boost::trim_copy(*node));
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::invalid_argument("config: '" + path + "' must be a boolean");
}

// Shortest text that reads back to the same double.
std::string num(double x) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, r.ptr);
}

std::string join_numbers(const std::vector<double>& v, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? sep : "") + num(v[i]);
  return out;
}

}  // namespace

std::vector<Category> parse_categories(const std::string& text) {
  std::vector<std::string> parts;
  boost::split(parts, text, boost::is_any_of(","));
  std::vector<Category> out;
  for (std::string part : parts) {
    boost::trim(part);
    if (part.empty()) continue;
    const std::size_t dash = part.find('-');
    try {
      Category c{};
      c.id = static_cast<int>(out.size()) + 1;
      if (dash == std::string::npos) {
        c.first_column = c.last_column = std::stoi(part);
      } else {
        c.first_column = std::stoi(part.substr(0, dash));
        c.last_column = std::stoi(part.substr(dash + 1));
      }
      if (c.first_column < 0 || c.last_column < c.first_column) throw std::invalid_argument(part);
      out.push_back(c);
    } catch (const std::exception&) {
      throw std::invalid_argument("config: bad category range '" + part + "'");
    }
  }
  if (out.empty()) throw std::invalid_argument("config: no categories given");
  return out;
}

PipelineConfig parse_config(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  for (const auto& [section, body] : tree) {
    const auto it = known_keys().find(section);
    if (it == known_keys().end()) throw std::invalid_argument("config: unknown section [" + section + "]");
    for (const auto& [key, value] : body) {
      if (!it->second.contains(key)) throw std::invalid_argument("config: unknown key '" + key + "' in [" + section + "]");
    }
  }

  PipelineConfig cfg;
  const Layout def = Layout::standard_shelf();
  const int k_x = get(tree, "layout.k_x", def.grid.k_x());
  const int k_y = get(tree, "layout.k_y", def.grid.k_y());
  const double spacing = get(tree, "layout.spacing_m", def.grid.spacing_x());
  const double spacing_y = get(tree, "layout.spacing_y_m", spacing);
  Point3 origin = def.grid.origin();
  if (auto s = tree.get_optional<std::string>("layout.origin")) origin = parse_point(*s, "origin");
  TagGrid grid(k_x, k_y, spacing, spacing_y, origin);

  AntennaArray antennas = def.antennas;
  if (auto s = tree.get_optional<std::string>("layout.antenna_positions")) {
    antennas.positions.clear();
    std::vector<std::string> parts;
    boost::split(parts, *s, boost::is_any_of("|"));
    for (const std::string& p : parts) antennas.positions.push_back(parse_point(p, "antenna_positions"));
  }
  if (antennas.positions.empty()) throw std::invalid_argument("config: at least one antenna is required");

  std::vector<double> z_planes;
  for (const ImagePlane& p : def.planes) z_planes.push_back(p.z_offset());
  if (auto s = tree.get_optional<std::string>("layout.z_planes")) z_planes = parse_numbers(*s, "z_planes");
  if (z_planes.empty()) throw std::invalid_argument("config: at least one image plane is required");
  const int p_x = get(tree, "layout.p_x", def.reference_plane().p_x());
  const int p_y = get(tree, "layout.p_y", def.reference_plane().p_y());
  std::vector<ImagePlane> planes;
  for (double z : z_planes) planes.emplace_back(grid, z, p_x, p_y);

  CategoryLayout cats;
  if (auto s = tree.get_optional<std::string>("layout.categories")) {
    cats = CategoryLayout(parse_categories(*s), grid, planes.front());
  } else {
    cats = CategoryLayout(def.categories.categories(), grid, planes.front());
  }
  cfg.layout = Layout{std::move(grid), std::move(antennas), std::move(planes), std::move(cats)};

  ChannelModel& ch = cfg.channel;
  ch.tx_power_dbm = get(tree, "channel.tx_power_dbm", ch.tx_power_dbm);
  ch.antenna_gain_db = get(tree, "channel.antenna_gain_db", ch.antenna_gain_db);
  ch.tag_gain_db = get(tree, "channel.tag_gain_db", ch.tag_gain_db);
  ch.backscatter_loss_db = get(tree, "channel.backscatter_loss_db", ch.backscatter_loss_db);
  ch.env_constant_db = get(tree, "channel.env_constant_db", ch.env_constant_db);
  ch.baseline_exponent = get(tree, "channel.baseline_exponent", ch.baseline_exponent);
  ch.noise_sigma_db = get(tree, "channel.noise_sigma_db", ch.noise_sigma_db);
  ch.cable_phase_offset_rad = get(tree, "channel.cable_phase_offset_rad", ch.cable_phase_offset_rad);
  ch.tag_backscatter_phase_rad = get(tree, "channel.tag_backscatter_phase_rad", ch.tag_backscatter_phase_rad);
  ch.multipath_phase_sigma_rad = get(tree, "channel.multipath_phase_sigma_rad", ch.multipath_phase_sigma_rad);
  if (tree.get_optional<std::string>("channel.first_channel_hz") || tree.get_optional<std::string>("channel.channels") ||
      tree.get_optional<std::string>("channel.channel_step_hz")) {
    const double f0 = get(tree, "channel.first_channel_hz", ch.subcarriers_hz.front());
    const double step = get(tree, "channel.channel_step_hz", 0.5e6);
    const int n = get(tree, "channel.channels", ch.channel_count());
    if (n < 1 || !(f0 > 0.0) || step < 0.0) throw std::invalid_argument("config: invalid channel plan");
    ch.subcarriers_hz.assign(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) ch.subcarriers_hz[static_cast<std::size_t>(i)] = f0 + step * i;
  }
  if (ch.noise_sigma_db < 0.0) throw std::invalid_argument("config: noise_sigma_db must be >= 0");
  cfg.schedule.rate_per_s = get(tree, "channel.rate_per_s", cfg.schedule.rate_per_s);
  cfg.schedule.reads_per_cycle = get(tree, "channel.reads_per_cycle", cfg.schedule.reads_per_cycle);
  if (!(cfg.schedule.rate_per_s > 0.0) || cfg.schedule.reads_per_cycle < 1) {
    throw std::invalid_argument("config: read rate and reads per cycle must be positive");
  }

  MonitorConfig& mon = cfg.monitor;
  mon.buffer_reads = get(tree, "monitor.buffer_reads", mon.buffer_reads);
  mon.tick_period_s = get(tree, "monitor.tick_period_s", mon.tick_period_s);
  mon.phase_threshold_rad = get(tree, "monitor.phase_threshold_rad", mon.phase_threshold_rad);
  mon.power_threshold = get(tree, "monitor.power_threshold", mon.power_threshold);
  if (mon.buffer_reads == 0 || !(mon.tick_period_s > 0.0)) throw std::invalid_argument("config: invalid monitor settings");

  ImagingParams& im = cfg.imaging;
  im.alpha = get(tree, "imaging.alpha", im.alpha);
  im.theta0 = get(tree, "imaging.theta0", im.theta0);
  im.c_n = get(tree, "imaging.c_n", im.c_n);
  im.c_x = get(tree, "imaging.c_x", im.c_x);
  im.delta_vox = get(tree, "imaging.delta_vox", im.delta_vox);

  DnnSettings& dnn = cfg.dnn;
  dnn.ensemble = get(tree, "dnn.ensemble", dnn.ensemble);
  dnn.epochs = get(tree, "dnn.epochs", dnn.epochs);
  dnn.l2 = get(tree, "dnn.l2", dnn.l2);
  dnn.learning_rate = get(tree, "dnn.learning_rate", dnn.learning_rate);
  dnn.batch_size = get(tree, "dnn.batch_size", dnn.batch_size);
  dnn.retain = get(tree, "dnn.retain", dnn.retain);
  dnn.max_rss = get(tree, "dnn.max_rss", dnn.max_rss);
  dnn.seed = get(tree, "dnn.seed", dnn.seed);
  if (dnn.ensemble < 1 || dnn.ensemble % 2 == 0) throw std::invalid_argument("config: ensemble size must be odd");
  if (!(dnn.max_rss > 0.0)) throw std::invalid_argument("config: max_rss must be > 0");

  WindowConfig& win = cfg.window;
  win.k_cw = get(tree, "window.k_cw", win.k_cw);
  win.median_kernel = get(tree, "window.median_kernel", win.median_kernel);
  win.average_kernel = get(tree, "window.average_kernel", win.average_kernel);
  if (auto s = tree.get_optional<std::string>("window.merge")) win.merge = parse_window_merge(boost::trim_copy(*s));
  win.sample_outside = get_bool(tree, "window.sample_outside", win.sample_outside);
  win.validate(cfg.layout.grid.k_x());

  TrackingSettings& tr = cfg.tracking;
  tr.eta2 = get(tree, "tracking.eta2", tr.eta2);
  tr.blobs.threshold = get(tree, "tracking.threshold", tr.blobs.threshold);
  tr.blobs.min_area = get(tree, "tracking.min_blob_area", tr.blobs.min_area);
  tr.blobs.buffer_frames = get(tree, "tracking.buffer_frames", tr.blobs.buffer_frames);
  tr.blobs.background_frames = get(tree, "tracking.background_frames", tr.blobs.background_frames);
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path.string());
  return parse_config(in);
}

void write_config(std::ostream& out, const PipelineConfig& cfg) {
  const Layout& l = cfg.layout;
  out << "[layout]\n";
  out << "k_x = " << l.grid.k_x() << "\nk_y = " << l.grid.k_y() << '\n';
  out << "spacing_m = " << num(l.grid.spacing_x()) << "\nspacing_y_m = " << num(l.grid.spacing_y()) << '\n';
  out << "origin = " << join_numbers({l.grid.origin().x(), l.grid.origin().y(), l.grid.origin().z()}, " ") << '\n';
  out << "antenna_positions = ";
  for (int a = 0; a < l.antennas.size(); ++a) {
    const Point3& p = l.antennas.position(a);
    out << (a ? " | " : "") << join_numbers({p.x(), p.y(), p.z()}, " ");
  }
  std::vector<double> z;
  for (const ImagePlane& p : l.planes) z.push_back(p.z_offset());
  out << "\nz_planes = " << join_numbers(z, " ") << '\n';
  out << "p_x = " << l.reference_plane().p_x() << "\np_y = " << l.reference_plane().p_y() << '\n';
  out << "categories = ";
  for (int i = 0; i < l.categories.size(); ++i) {
    const Category& c = l.categories.category(i);
    out << (i ? ", " : "") << c.first_column << '-' << c.last_column;
  }

  const ChannelModel& ch = cfg.channel;
  out << "\n\n[channel]\n";
  out << "tx_power_dbm = " << num(ch.tx_power_dbm) << "\nantenna_gain_db = " << num(ch.antenna_gain_db)
      << "\ntag_gain_db = " << num(ch.tag_gain_db) << "\nbackscatter_loss_db = " << num(ch.backscatter_loss_db)
      << "\nenv_constant_db = " << num(ch.env_constant_db) << "\nbaseline_exponent = " << num(ch.baseline_exponent)
      << "\nnoise_sigma_db = " << num(ch.noise_sigma_db)
      << "\ncable_phase_offset_rad = " << num(ch.cable_phase_offset_rad)
      << "\ntag_backscatter_phase_rad = " << num(ch.tag_backscatter_phase_rad)
      << "\nmultipath_phase_sigma_rad = " << num(ch.multipath_phase_sigma_rad) << '\n';
  const auto& sub = ch.subcarriers_hz;
  out << "first_channel_hz = " << num(sub.front())
      << "\nchannel_step_hz = " << num(sub.size() > 1 ? sub[1] - sub[0] : 0.5e6)
      << "\nchannels = " << sub.size() << '\n';
  out << "rate_per_s = " << num(cfg.schedule.rate_per_s) << "\nreads_per_cycle = " << cfg.schedule.reads_per_cycle;

  const MonitorConfig& mon = cfg.monitor;
  out << "\n\n[monitor]\nbuffer_reads = " << mon.buffer_reads << "\ntick_period_s = " << num(mon.tick_period_s)
      << "\nphase_threshold_rad = " << num(mon.phase_threshold_rad)
      << "\npower_threshold = " << num(mon.power_threshold);

  const ImagingParams& im = cfg.imaging;
  out << "\n\n[imaging]\nalpha = " << num(im.alpha) << "\ntheta0 = " << num(im.theta0) << "\nc_n = " << num(im.c_n)
      << "\nc_x = " << num(im.c_x) << "\ndelta_vox = " << num(im.delta_vox);

  const DnnSettings& d = cfg.dnn;
  out << "\n\n[dnn]\nensemble = " << d.ensemble << "\nepochs = " << d.epochs << "\nl2 = " << num(d.l2)
      << "\nlearning_rate = " << num(d.learning_rate) << "\nbatch_size = " << d.batch_size
      << "\nretain = " << num(d.retain) << "\nmax_rss = " << num(d.max_rss) << "\nseed = " << d.seed;

  const WindowConfig& w = cfg.window;
  out << "\n\n[window]\nk_cw = " << w.k_cw << "\nmedian_kernel = " << w.median_kernel
      << "\naverage_kernel = " << w.average_kernel << "\nmerge = " << to_string(w.merge)
      << "\nsample_outside = " << (w.sample_outside ? "true" : "false");

  const TrackingSettings& t = cfg.tracking;
  out << "\n\n[tracking]\neta2 = " << num(t.eta2) << "\nthreshold = " << num(t.blobs.threshold)
      << "\nmin_blob_area = " << t.blobs.min_area << "\nbuffer_frames = " << t.blobs.buffer_frames
      << "\nbackground_frames = " << t.blobs.background_frames << '\n';
}

}  // namespace tomo
