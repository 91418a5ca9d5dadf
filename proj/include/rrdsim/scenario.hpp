#pragma once

// Scenario files: INI dialect (sections of `key = value`, `;` or `#`
// comments), parsed with Boost.PropertyTree. Every accepted key is declared in
// one parameter table, which also drives the provenance banner and the
// scenario echo embedded in CSV output.

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <type_traits>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "rrdsim/simulation.hpp"

namespace rrdsim {

class ScenarioError : public std::runtime_error {
 public:
  enum class Kind { MissingFile, Parse, Invalid };
  ScenarioError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last) {
    throw ScenarioError(ScenarioError::Kind::Invalid, key + ": cannot parse '" + text + "' as a number");
  }
  return value;
}

inline bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "yes" || text == "1") return true;
  if (text == "false" || text == "no" || text == "0") return false;
  throw ScenarioError(ScenarioError::Kind::Invalid, key + ": expected true/false, got '" + text + "'");
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

/// Reference: the published simulation setup. Design: chosen here where that setup is silent.
enum class Provenance { Reference, Design };

inline const char* to_string(Provenance p) {
  return p == Provenance::Reference ? "reference setup" : "design default";
}

struct ScenarioParam {
  std::string section;
  std::string key;
  Provenance provenance;
  std::function<std::string(const ScenarioConfig&)> get;
  std::function<void(ScenarioConfig&, const std::string&)> set;

  std::string name() const { return section + "." + key; }
};

namespace detail {

/// Attack keys apply to every configured attacker; `attack.count` sizes the list.
inline AttackProfile& attack_template(ScenarioConfig& c) {
  if (c.attackers.empty()) c.attackers.push_back(AttackProfile{});
  return c.attackers.front();
}
inline AttackProfile attack_view(const ScenarioConfig& c) {
  return c.attackers.empty() ? AttackProfile{} : c.attackers.front();
}

template <typename T>
ScenarioParam number_param(std::string section, std::string key, Provenance prov, T ScenarioConfig::*outer) {
  const std::string name = section + "." + key;
  return {section, key, prov,
          [outer](const ScenarioConfig& c) {
            if constexpr (std::is_floating_point_v<T>) return format_double(c.*outer);
            else return std::to_string(c.*outer);
          },
          [outer, name](ScenarioConfig& c, const std::string& v) { c.*outer = parse_number<T>(name, v); }};
}

template <typename Sub, typename T>
ScenarioParam nested_param(std::string section, std::string key, Provenance prov, Sub ScenarioConfig::*outer,
                           T Sub::*inner) {
  const std::string name = section + "." + key;
  return {section, key, prov,
          [outer, inner](const ScenarioConfig& c) {
            if constexpr (std::is_floating_point_v<T>) return format_double(c.*outer.*inner);
            else return std::to_string(c.*outer.*inner);
          },
          [outer, inner, name](ScenarioConfig& c, const std::string& v) {
            c.*outer.*inner = parse_number<T>(name, v);
          }};
}

template <typename T>
ScenarioParam attack_param(std::string key, Provenance prov, T AttackProfile::*field) {
  const std::string name = "attack." + key;
  return {"attack", key, prov,
          [field](const ScenarioConfig& c) {
            if constexpr (std::is_floating_point_v<T>) return format_double(attack_view(c).*field);
            else return std::to_string(attack_view(c).*field);
          },
          [field, name](ScenarioConfig& c, const std::string& v) {
            attack_template(c).*field = parse_number<T>(name, v);
          }};
}

inline DefenseMode parse_defense_mode(const std::string& v) {
  if (v == "off") return DefenseMode::Off;
  if (v == "detect-only") return DefenseMode::DetectOnly;
  if (v == "phase1") return DefenseMode::Phase1;
  if (v == "phase2") return DefenseMode::Phase2;
  throw ScenarioError(ScenarioError::Kind::Invalid,
                      "defense.mode: expected off|detect-only|phase1|phase2, got '" + v + "'");
}

inline AttackMode parse_attack_mode(const std::string& v) {
  if (v == "inflate") return AttackMode::Inflate;
  if (v == "chain") return AttackMode::Chain;
  if (v == "flood") return AttackMode::Flood;
  throw ScenarioError(ScenarioError::Kind::Invalid, "attack.mode: expected inflate|chain|flood, got '" + v + "'");
}

inline std::string format_positions(const std::vector<Position>& ps) {
  std::string out;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (i) out += "; ";
    out += format_double(ps[i].x) + " " + format_double(ps[i].y);
  }
  return out;
}

inline std::vector<Position> parse_positions(const std::string& v) {
  std::vector<Position> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ';')) {
    item = trim(item);
    if (item.empty()) continue;
    std::istringstream is(item);
    std::string xs, ys, extra;
    if (!(is >> xs >> ys) || (is >> extra)) {
      throw ScenarioError(ScenarioError::Kind::Invalid, "topology.positions: expected 'x y' pairs, got '" + item + "'");
    }
    out.push_back({parse_number<double>("topology.positions", xs), parse_number<double>("topology.positions", ys)});
  }
  return out;
}

}  // namespace detail

/// Every key a scenario file may contain, in banner order.
inline const std::vector<ScenarioParam>& scenario_params() {
  using detail::attack_param;
  using detail::nested_param;
  using detail::number_param;
  using P = Provenance;
  static const std::vector<ScenarioParam> params = [] {
    std::vector<ScenarioParam> p;
    p.push_back(number_param("run", "node_count", P::Reference, &ScenarioConfig::node_count));
    p.push_back(number_param("run", "run_seconds", P::Reference, &ScenarioConfig::run_seconds));
    p.push_back(number_param("run", "seed", P::Design, &ScenarioConfig::seed));
    p.push_back(number_param("run", "replications", P::Design, &ScenarioConfig::replications));
    p.push_back({"run", "allow_density_override", P::Design,
                 [](const ScenarioConfig& c) { return std::string(c.allow_density_override ? "true" : "false"); },
                 [](ScenarioConfig& c, const std::string& v) {
                   c.allow_density_override = detail::parse_bool("run.allow_density_override", v);
                 }});
    p.push_back({"run", "expect_single_collision_domain", P::Design,
                 [](const ScenarioConfig& c) {
                   return std::string(c.expect_single_collision_domain ? "true" : "false");
                 },
                 [](ScenarioConfig& c, const std::string& v) {
                   c.expect_single_collision_domain = detail::parse_bool("run.expect_single_collision_domain", v);
                 }});

    p.push_back(nested_param("timing", "bitrate_bps", P::Reference, &ScenarioConfig::timing, &TimingConfig::bitrate_bps));
    p.push_back(nested_param("timing", "mac_header_bits", P::Reference, &ScenarioConfig::timing,
                             &TimingConfig::mac_header_bits));
    p.push_back(nested_param("timing", "rts_cts_threshold_bytes", P::Reference, &ScenarioConfig::timing,
                             &TimingConfig::rts_cts_threshold_bytes));
    p.push_back(nested_param("timing", "sifs_us", P::Design, &ScenarioConfig::timing, &TimingConfig::sifs_us));
    p.push_back(nested_param("timing", "difs_us", P::Design, &ScenarioConfig::timing, &TimingConfig::difs_us));
    p.push_back(nested_param("timing", "slot_us", P::Design, &ScenarioConfig::timing, &TimingConfig::slot_us));
    p.push_back(nested_param("timing", "phy_preamble_us", P::Design, &ScenarioConfig::timing,
                             &TimingConfig::phy_preamble_us));
    p.push_back(nested_param("timing", "rts_bits", P::Design, &ScenarioConfig::timing, &TimingConfig::rts_bits));
    p.push_back(nested_param("timing", "cts_bits", P::Design, &ScenarioConfig::timing, &TimingConfig::cts_bits));
    p.push_back(nested_param("timing", "ack_bits", P::Design, &ScenarioConfig::timing, &TimingConfig::ack_bits));

    p.push_back(nested_param("mac", "queue_length", P::Reference, &ScenarioConfig::mac, &MacParams::queue_capacity));
    p.push_back(nested_param("mac", "cw_min", P::Design, &ScenarioConfig::mac, &MacParams::cw_min));
    p.push_back(nested_param("mac", "cw_max", P::Design, &ScenarioConfig::mac, &MacParams::cw_max));
    p.push_back(nested_param("mac", "retry_limit", P::Design, &ScenarioConfig::mac, &MacParams::retry_limit));

    p.push_back(nested_param("phy", "tx_power_mw", P::Reference, &ScenarioConfig::phy, &PhyConfig::tx_power_mw));
    p.push_back(nested_param("phy", "path_loss_alpha", P::Reference, &ScenarioConfig::phy, &PhyConfig::path_loss_alpha));
    p.push_back(nested_param("phy", "sensitivity_dbm", P::Reference, &ScenarioConfig::phy, &PhyConfig::sensitivity_dbm));
    p.push_back(nested_param("phy", "carrier_frequency_hz", P::Reference, &ScenarioConfig::phy,
                             &PhyConfig::carrier_frequency_hz));
    p.push_back(nested_param("phy", "thermal_noise_dbm", P::Reference, &ScenarioConfig::phy,
                             &PhyConfig::thermal_noise_dbm));
    p.push_back(nested_param("phy", "neighborhood_max_age_s", P::Reference, &ScenarioConfig::phy,
                             &PhyConfig::neighborhood_max_age_s));
    p.push_back(nested_param("phy", "carrier_sense_dbm", P::Design, &ScenarioConfig::phy,
                             &PhyConfig::carrier_sense_dbm));
    p.push_back(nested_param("phy", "reference_distance_m", P::Design, &ScenarioConfig::phy,
                             &PhyConfig::reference_distance_m));

    p.push_back(number_param("topology", "width_m", P::Reference, &ScenarioConfig::playground_width_m));
    p.push_back(number_param("topology", "height_m", P::Reference, &ScenarioConfig::playground_height_m));
    p.push_back({"topology", "positions", P::Design,
                 [](const ScenarioConfig& c) {
                   return c.positions.empty() ? std::string("random") : detail::format_positions(c.positions);
                 },
                 [](ScenarioConfig& c, const std::string& v) {
                   c.positions = v == "random" ? std::vector<Position>{} : detail::parse_positions(v);
                 }});

    p.push_back({"traffic", "payload_bytes", P::Reference,
                 [](const ScenarioConfig& c) { return std::to_string(c.traffic.payload_bits / 8); },
                 [](ScenarioConfig& c, const std::string& v) {
                   c.traffic.payload_bits = 8 * detail::parse_number<std::int64_t>("traffic.payload_bytes", v);
                 }});
    p.push_back({"traffic", "law", P::Design,
                 [](const ScenarioConfig& c) { return std::string(to_string(c.traffic.law)); },
                 [](ScenarioConfig& c, const std::string& v) {
                   if (v == "poisson") c.traffic.law = TrafficConfig::Law::Poisson;
                   else if (v == "saturation") c.traffic.law = TrafficConfig::Law::Saturation;
                   else throw ScenarioError(ScenarioError::Kind::Invalid,
                                            "traffic.law: expected poisson|saturation, got '" + v + "'");
                 }});
    p.push_back(nested_param("traffic", "mean_interarrival_ms", P::Design, &ScenarioConfig::traffic,
                             &TrafficConfig::mean_interarrival_ms));

    p.push_back({"defense", "mode", P::Design,
                 [](const ScenarioConfig& c) { return std::string(to_string(c.defense.mode)); },
                 [](ScenarioConfig& c, const std::string& v) { c.defense.mode = detail::parse_defense_mode(v); }});
    p.push_back({"defense", "variant", P::Design,
                 [](const ScenarioConfig& c) { return std::string(to_string(c.defense.variant)); },
                 [](ScenarioConfig& c, const std::string& v) {
                   if (v == "basic") c.defense.variant = DetectorVariant::Basic;
                   else if (v == "improved") c.defense.variant = DetectorVariant::Improved;
                   else throw ScenarioError(ScenarioError::Kind::Invalid,
                                            "defense.variant: expected basic|improved, got '" + v + "'");
                 }});
    p.push_back(nested_param("defense", "slack_us", P::Design, &ScenarioConfig::defense, &DetectorConfig::slack_us));

    p.push_back({"attack", "count", P::Reference,
                 [](const ScenarioConfig& c) { return std::to_string(c.attackers.size()); },
                 [](ScenarioConfig& c, const std::string& v) {
                   const auto n = detail::parse_number<int>("attack.count", v);
                   if (n < 0) throw ScenarioError(ScenarioError::Kind::Invalid, "attack.count must be >= 0");
                   const AttackProfile tmpl = detail::attack_view(c);
                   c.attackers.assign(static_cast<std::size_t>(n), tmpl);
                 }});
    p.push_back({"attack", "mode", P::Design,
                 [](const ScenarioConfig& c) { return std::string(to_string(detail::attack_view(c).mode)); },
                 [](ScenarioConfig& c, const std::string& v) {
                   detail::attack_template(c).mode = detail::parse_attack_mode(v);
                 }});
    p.push_back(attack_param("claimed_duration_us", P::Design, &AttackProfile::claimed_duration_us));
    p.push_back({"attack", "payload_bytes", P::Design,
                 [](const ScenarioConfig& c) { return std::to_string(detail::attack_view(c).actual_payload_bits / 8); },
                 [](ScenarioConfig& c, const std::string& v) {
                   detail::attack_template(c).actual_payload_bits =
                       8 * detail::parse_number<std::int64_t>("attack.payload_bytes", v);
                 }});
    p.push_back(attack_param("chain_gap_us", P::Design, &AttackProfile::chain_gap_us));
    p.push_back(attack_param("flood_interval_us", P::Design, &AttackProfile::flood_interval_us));
    p.push_back({"attack", "flood_target", P::Design,
                 [](const ScenarioConfig& c) { return std::to_string(detail::attack_view(c).flood_target.value()); },
                 [](ScenarioConfig& c, const std::string& v) {
                   detail::attack_template(c).flood_target =
                       MacAddress(detail::parse_number<std::uint32_t>("attack.flood_target", v));
                 }});
    p.push_back({"attack", "data_duration_override_us", P::Design,
                 [](const ScenarioConfig& c) {
                   const auto o = detail::attack_view(c).data_duration_override_us;
                   return o ? std::to_string(*o) : std::string("none");
                 },
                 [](ScenarioConfig& c, const std::string& v) {
                   auto& a = detail::attack_template(c);
                   if (v == "none") a.data_duration_override_us.reset();
                   else a.data_duration_override_us = detail::parse_number<Micros>("attack.data_duration_override_us", v);
                 }});
    p.push_back({"attack", "mean_interarrival_ms", P::Design,
                 [](const ScenarioConfig& c) {
                   const auto o = detail::attack_view(c).mean_interarrival_ms;
                   return o ? detail::format_double(*o) : std::string("traffic");
                 },
                 [](ScenarioConfig& c, const std::string& v) {
                   auto& a = detail::attack_template(c);
                   if (v == "traffic") a.mean_interarrival_ms.reset();
                   else a.mean_interarrival_ms = detail::parse_number<double>("attack.mean_interarrival_ms", v);
                 }});

    p.push_back({"metrics", "nav_window_s", P::Design,
                 [](const ScenarioConfig& c) {
                   return c.nav_window_s ? detail::format_double(c.nav_window_s->first) + " " +
                                               detail::format_double(c.nav_window_s->second)
                                         : std::string("run");
                 },
                 [](ScenarioConfig& c, const std::string& v) {
                   if (v == "run") {
                     c.nav_window_s.reset();
                     return;
                   }
                   std::istringstream is(v);
                   std::string a, b, extra;
                   if (!(is >> a >> b) || (is >> extra)) {
                     throw ScenarioError(ScenarioError::Kind::Invalid, "metrics.nav_window_s: expected 'from to'");
                   }
                   c.nav_window_s = std::pair{detail::parse_number<double>("metrics.nav_window_s", a),
                                              detail::parse_number<double>("metrics.nav_window_s", b)};
                 }});
    return p;
  }();
  return params;
}

/// Parses scenario text. Unknown sections or keys are errors.
inline ScenarioConfig parse_scenario(std::istream& in, const std::string& origin = "<scenario>") {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ScenarioError(ScenarioError::Kind::Parse,
                        origin + ":" + std::to_string(e.line()) + ": parse error: " + e.message());
  }

  std::map<std::string, const ScenarioParam*> by_name;
  for (const auto& p : scenario_params()) by_name[p.name()] = &p;

  ScenarioConfig cfg;
  // attack.count first, so per-attacker keys land in every copy.
  std::vector<std::pair<const ScenarioParam*, std::string>> assignments;
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      throw ScenarioError(ScenarioError::Kind::Invalid,
                          origin + ": key '" + section + "' must live inside a [section]");
    }
    for (const auto& [key, value] : body) {
      const std::string name = section + "." + key;
      auto it = by_name.find(name);
      if (it == by_name.end()) throw ScenarioError(ScenarioError::Kind::Invalid, origin + ": unknown key '" + name + "'");
      assignments.emplace_back(it->second, detail::trim(value.data()));
    }
  }
  for (const auto& [param, value] : assignments)
    if (param->name() != "attack.count") param->set(cfg, value);
  for (const auto& [param, value] : assignments)
    if (param->name() == "attack.count") param->set(cfg, value);

  try {
    cfg.validate();
  } catch (const ScenarioError&) {
    throw;
  } catch (const std::exception& e) {
    throw ScenarioError(ScenarioError::Kind::Invalid, origin + ": " + e.what());
  }
  return cfg;
}

inline ScenarioConfig parse_scenario_text(const std::string& text) {
  std::istringstream in(text);
  return parse_scenario(in);
}

inline ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(ScenarioError::Kind::MissingFile, "cannot open scenario file '" + path.string() + "'");
  return parse_scenario(in, path.string());
}

/// Effective scenario as INI text; parsing it back yields the same configuration.
inline std::string scenario_to_ini(const ScenarioConfig& cfg, const std::string& line_prefix = "") {
  std::string out;
  std::string section;
  for (const auto& p : scenario_params()) {
    if (p.section != section) {
      section = p.section;
      out += line_prefix + "[" + section + "]\n";
    }
    out += line_prefix + p.key + " = " + p.get(cfg) + "\n";
  }
  return out;
}

/// One line per parameter with its value and where the value comes from.
inline void print_banner(std::ostream& os, const ScenarioConfig& cfg) {
  const ScenarioConfig defaults;
  os << "scenario parameters (value, provenance):\n";
  for (const auto& p : scenario_params()) {
    const std::string value = p.get(cfg);
    const bool overridden = value != p.get(defaults);
    std::string line = "  " + p.name();
    line.resize(std::max<std::size_t>(line.size() + 1, 38), ' ');
    line += value;
    line.resize(std::max<std::size_t>(line.size() + 1, 58), ' ');
    line += overridden ? std::string("scenario override (default ") + p.get(defaults) + ")" : to_string(p.provenance);
    os << line << "\n";
  }
}

}  // namespace rrdsim
