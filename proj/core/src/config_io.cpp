#include "v2vdep/config_io.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace v2vdep {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> items;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, ',')) items.push_back(trim(cur));
  return items;
}

[[noreturn]] void fail(const std::string& key, const std::string& msg) {
  throw ConfigError("config key '" + key + "': " + msg);
}

double parse_number(const std::string& text, const std::string& key) {
  const std::string t = trim(text);
  try {
    std::size_t used = 0;
    const double v = std::stod(t, &used);
    if (used != t.size()) fail(key, "trailing characters after number '" + t + "'");
    return v;
  } catch (const std::logic_error&) {
    fail(key, "expected a number, got '" + t + "'");
  }
}

// "27 dBm" or "0.5 W" (suffix required so units are never guessed).
double parse_power(const std::string& text, const std::string& key) {
  const std::string t = trim(text);
  auto ends_with = [&t](const std::string& suffix) {
    return t.size() > suffix.size() && t.compare(t.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  if (ends_with("dBm")) return dbm_to_watts(parse_number(t.substr(0, t.size() - 3), key));
  if (ends_with("W")) return parse_number(t.substr(0, t.size() - 1), key);
  fail(key, "power needs an explicit unit suffix, e.g. '27 dBm' or '0.5 W'");
}

double parse_power_density(const std::string& text, const std::string& key) {
  const std::string t = trim(text);
  auto ends_with = [&t](const std::string& suffix) {
    return t.size() > suffix.size() && t.compare(t.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  if (ends_with("dBm/Hz")) return dbm_to_watts(parse_number(t.substr(0, t.size() - 6), key));
  if (ends_with("W/Hz")) return parse_number(t.substr(0, t.size() - 4), key);
  fail(key, "power density needs a 'dBm/Hz' or 'W/Hz' suffix");
}

// Plain number means seconds; "ms"/"us"/"s" suffixes accepted.
double parse_delay(const std::string& text, const std::string& key) {
  const std::string t = trim(text);
  auto ends_with = [&t](const std::string& suffix) {
    return t.size() > suffix.size() && t.compare(t.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  if (ends_with("ms")) return 1e-3 * parse_number(t.substr(0, t.size() - 2), key);
  if (ends_with("us")) return 1e-6 * parse_number(t.substr(0, t.size() - 2), key);
  if (ends_with("s")) return parse_number(t.substr(0, t.size() - 1), key);
  return parse_number(t, key);
}

std::vector<double> parse_number_list(const std::string& text, const std::string& key) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) out.push_back(parse_number(item, key));
  return out;
}

}  // namespace

ScenarioConfig parse_config(std::istream& in) {
  static const std::set<std::string> known_keys = {
      "scenario.tx_positions_m",      "scenario.rx_positions_m",
      "interferer.density_per_m",     "interferer.power",
      "interferer.road_length_m",     "radio.path_loss_exponent",
      "radio.bandwidth_hz",           "radio.noise_psd",
      "radio.packet_bits",            "requirements.delay_targets",
      "power.p_max",                  "power.tx_powers",
  };

  std::map<std::string, std::string> kv;
  std::string section;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw ConfigError("line " + std::to_string(line_no) + ": malformed section header");
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = section + "." + trim(t.substr(0, eq));
    if (!known_keys.count(key))
      throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    if (kv.count(key))
      throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    kv[key] = trim(t.substr(eq + 1));
  }

  auto require = [&kv](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw ConfigError("missing required config key '" + key + "'");
    return it->second;
  };

  ScenarioConfig cfg;
  cfg.geometry.tx_positions_m =
      parse_number_list(require("scenario.tx_positions_m"), "scenario.tx_positions_m");
  cfg.geometry.rx_positions_m =
      parse_number_list(require("scenario.rx_positions_m"), "scenario.rx_positions_m");

  cfg.interferers.density_per_m =
      parse_number(require("interferer.density_per_m"), "interferer.density_per_m");
  cfg.interferers.power_watts = parse_power(require("interferer.power"), "interferer.power");
  if (auto it = kv.find("interferer.road_length_m"); it != kv.end())
    cfg.interferers.road_length_m = parse_number(it->second, "interferer.road_length_m");

  cfg.radio.path_loss_exponent =
      parse_number(require("radio.path_loss_exponent"), "radio.path_loss_exponent");
  cfg.radio.bandwidth_hz = parse_number(require("radio.bandwidth_hz"), "radio.bandwidth_hz");
  cfg.radio.noise_psd_watts_per_hz = parse_power_density(require("radio.noise_psd"), "radio.noise_psd");
  const double bits = parse_number(require("radio.packet_bits"), "radio.packet_bits");
  if (bits != std::floor(bits)) throw ConfigError("config key 'radio.packet_bits': must be an integer");
  cfg.radio.packet_bits = static_cast<std::int64_t>(bits);

  for (const auto& item : split_list(require("requirements.delay_targets")))
    cfg.requirements.targets_s.push_back(parse_delay(item, "requirements.delay_targets"));

  cfg.allocation.p_max_watts = parse_power(require("power.p_max"), "power.p_max");
  if (auto it = kv.find("power.tx_powers"); it != kv.end()) {
    for (const auto& item : split_list(it->second))
      cfg.allocation.tx_powers_watts.push_back(parse_power(item, "power.tx_powers"));
  } else {
    cfg.allocation.tx_powers_watts.assign(cfg.geometry.link_count(), cfg.allocation.p_max_watts);
  }
  return cfg;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in);
}

std::vector<std::pair<std::string, std::string>> config_echo(const ScenarioConfig& config) {
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  auto list = [&num](const std::vector<double>& vs) {
    std::string out;
    for (std::size_t i = 0; i < vs.size(); ++i) {
      if (i) out += ", ";
      out += num(vs[i]);
    }
    return out;
  };
  std::vector<std::pair<std::string, std::string>> echo;
  echo.emplace_back("scenario.tx_positions_m", list(config.geometry.tx_positions_m));
  echo.emplace_back("scenario.rx_positions_m", list(config.geometry.rx_positions_m));
  echo.emplace_back("interferer.density_per_m", num(config.interferers.density_per_m));
  echo.emplace_back("interferer.power_watts", num(config.interferers.power_watts));
  echo.emplace_back("interferer.road_length_m", num(config.interferers.road_length_m));
  echo.emplace_back("radio.path_loss_exponent", num(config.radio.path_loss_exponent));
  echo.emplace_back("radio.bandwidth_hz", num(config.radio.bandwidth_hz));
  echo.emplace_back("radio.noise_psd_watts_per_hz", num(config.radio.noise_psd_watts_per_hz));
  echo.emplace_back("radio.packet_bits", std::to_string(config.radio.packet_bits));
  echo.emplace_back("requirements.delay_targets_s", list(config.requirements.targets_s));
  echo.emplace_back("power.p_max_watts", num(config.allocation.p_max_watts));
  echo.emplace_back("power.tx_powers_watts", list(config.allocation.tx_powers_watts));
  return echo;
}

}  // namespace v2vdep
