#include "fdcf/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace fdcf {

std::vector<std::string> SystemConfig::validate() const {
  std::vector<std::string> errs;
  auto req = [&](bool ok, const std::string& msg) {
    if (!ok) errs.push_back(msg);
  };
  req(geometry.side_km > 0, "geometry.side_km must be > 0");
  req(geometry.num_aps >= 1, "geometry.num_aps must be >= 1");
  req(geometry.num_dl >= 0, "geometry.num_dl must be >= 0");
  req(geometry.num_ul >= 0, "geometry.num_ul must be >= 0");
  req(geometry.num_dl + geometry.num_ul >= 1, "geometry: num_dl + num_ul must be >= 1");
  req(pathloss.d0_km > 0, "pathloss.d0_km must be > 0");
  req(pathloss.d1_km > pathloss.d0_km, "pathloss.d1_km must exceed d0_km");
  req(pathloss.sigma_sd_db >= 0, "pathloss.sigma_sd_db must be >= 0");
  req(pathloss.shadow_delta >= 0 && pathloss.shadow_delta <= 1,
      "pathloss.shadow_delta must lie in [0,1]");
  req(pathloss.d_decorr_km > 0, "pathloss.d_decorr_km must be > 0");
  req(tau_t_dl >= geometry.num_dl, "frame.tau_t_dl must be >= geometry.num_dl");
  req(tau_t_ul >= geometry.num_ul, "frame.tau_t_ul must be >= geometry.num_ul");
  req(tau_t_dl >= 1, "frame.tau_t_dl must be >= 1");
  req(tau_t_ul >= 1, "frame.tau_t_ul must be >= 1");
  req(tau_c > tau_t(), "frame.tau_c must exceed tau_t_dl + tau_t_ul");
  req(t_coherence_s > 0, "frame.t_coherence_s must be > 0");
  req(p_pilot_w > 0, "radio.p_pilot_w must be > 0");
  req(n_tx >= 1, "radio.n_tx must be >= 1");
  req(n_rx >= 1, "radio.n_rx must be >= 1");
  req(quant_bits >= 1 && quant_bits <= 8, "fronthaul.bits must lie in [1,8]");
  req(c_fronthaul_bps > 0, "fronthaul.capacity_bps must be > 0");
  req(power.p0_ap_w >= 0, "power.p0_ap_w must be >= 0");
  req(power.p_tc_ap_w >= 0, "power.p_tc_ap_w must be >= 0");
  req(power.p_ft_w >= 0, "power.p_ft_w must be >= 0");
  req(power.p_tc_dl_ue_w >= 0, "power.p_tc_dl_ue_w must be >= 0");
  req(power.p_tc_ul_ue_w >= 0, "power.p_tc_ul_ue_w must be >= 0");
  req(power.alpha_ap > 0 && power.alpha_ap <= 1, "power.alpha_ap must lie in (0,1]");
  req(power.alpha_ue > 0 && power.alpha_ue <= 1, "power.alpha_ue must lie in (0,1]");
  req(power.bandwidth_hz > 0, "power.bandwidth_hz must be > 0");
  req(qos_dl_bits >= 0, "qos.se_min_dl must be >= 0");
  req(qos_ul_bits >= 0, "qos.se_min_ul must be >= 0");
  if (!weights_dl.empty()) {
    req(static_cast<int>(weights_dl.size()) == geometry.num_dl,
        "weights.dl must have geometry.num_dl entries");
    for (double w : weights_dl) req(w >= 0, "weights.dl entries must be >= 0");
  }
  if (!weights_ul.empty()) {
    req(static_cast<int>(weights_ul.size()) == geometry.num_ul,
        "weights.ul must have geometry.num_ul entries");
    for (double w : weights_ul) req(w >= 0, "weights.ul entries must be >= 0");
  }
  req(sca_epsilon > 0, "sca.epsilon must be > 0");
  req(sca_max_iters >= 1, "sca.max_iters must be >= 1");
  req(sca_margin > 0 && sca_margin < 0.1, "sca.margin must lie in (0, 0.1)");
  req(solver_tol > 0, "sca.solver_tol must be > 0");
  req(mc_trials >= 1, "mc.trials must be >= 1");
  req(drops >= 1, "mc.drops must be >= 1");
  return errs;
}

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<double> parse_list(const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    if (!tok.empty()) out.push_back(std::stod(tok));
  }
  return out;
}

std::string format_list(const std::vector<double>& v) {
  std::ostringstream os;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) os << ",";
    os << v[i];
  }
  return os.str();
}

// One registry drives parsing, formatting, and the round-trip guarantee.
struct Field {
  std::function<void(SystemConfig&, const std::string&)> set;
  std::function<std::string(const SystemConfig&)> get;
};

std::map<std::string, Field> field_registry() {
  std::map<std::string, Field> f;
  auto num = [&](const std::string& key, auto member) {
    f[key] = Field{[member](SystemConfig& c, const std::string& v) {
                     c.*member = static_cast<std::decay_t<decltype(std::declval<SystemConfig>().*member)>>(std::stod(v));
                   },
                   [member](const SystemConfig& c) {
                     std::ostringstream os;
                     os.precision(17);
                     os << c.*member;
                     return os.str();
                   }};
  };
  auto sub = [&](const std::string& key, auto outer, auto member) {
    f[key] = Field{[outer, member](SystemConfig& c, const std::string& v) {
                     (c.*outer).*member = static_cast<std::decay_t<decltype((std::declval<SystemConfig>().*outer).*member)>>(std::stod(v));
                   },
                   [outer, member](const SystemConfig& c) {
                     std::ostringstream os;
                     os.precision(17);
                     os << (c.*outer).*member;
                     return os.str();
                   }};
  };
  sub("geometry.side_km", &SystemConfig::geometry, &GeometryConfig::side_km);
  sub("geometry.num_aps", &SystemConfig::geometry, &GeometryConfig::num_aps);
  sub("geometry.num_dl", &SystemConfig::geometry, &GeometryConfig::num_dl);
  sub("geometry.num_ul", &SystemConfig::geometry, &GeometryConfig::num_ul);
  sub("pathloss.d0_km", &SystemConfig::pathloss, &PathLossParams::d0_km);
  sub("pathloss.d1_km", &SystemConfig::pathloss, &PathLossParams::d1_km);
  sub("pathloss.carrier_mhz", &SystemConfig::pathloss, &PathLossParams::carrier_mhz);
  sub("pathloss.h_ap_m", &SystemConfig::pathloss, &PathLossParams::h_ap_m);
  sub("pathloss.h_ue_m", &SystemConfig::pathloss, &PathLossParams::h_ue_m);
  sub("pathloss.sigma_sd_db", &SystemConfig::pathloss, &PathLossParams::sigma_sd_db);
  sub("pathloss.shadow_delta", &SystemConfig::pathloss, &PathLossParams::shadow_delta);
  sub("pathloss.d_decorr_km", &SystemConfig::pathloss, &PathLossParams::d_decorr_km);
  num("frame.tau_c", &SystemConfig::tau_c);
  num("frame.tau_t_dl", &SystemConfig::tau_t_dl);
  num("frame.tau_t_ul", &SystemConfig::tau_t_ul);
  num("frame.t_coherence_s", &SystemConfig::t_coherence_s);
  num("radio.p_dl_dbm", &SystemConfig::p_dl_dbm);
  num("radio.p_ul_dbm", &SystemConfig::p_ul_dbm);
  num("radio.p_pilot_w", &SystemConfig::p_pilot_w);
  num("radio.noise_dbw", &SystemConfig::noise_dbw);
  num("radio.n_tx", &SystemConfig::n_tx);
  num("radio.n_rx", &SystemConfig::n_rx);
  num("fronthaul.bits", &SystemConfig::quant_bits);
  num("fronthaul.capacity_bps", &SystemConfig::c_fronthaul_bps);
  num("interference.gamma_ri_db", &SystemConfig::gamma_ri_db);
  num("interference.pl_ri_db", &SystemConfig::pl_ri_db);
  sub("power.p0_ap_w", &SystemConfig::power, &PowerModelParams::p0_ap_w);
  sub("power.p_tc_ap_w", &SystemConfig::power, &PowerModelParams::p_tc_ap_w);
  sub("power.p_ft_w", &SystemConfig::power, &PowerModelParams::p_ft_w);
  sub("power.p_tc_dl_ue_w", &SystemConfig::power, &PowerModelParams::p_tc_dl_ue_w);
  sub("power.p_tc_ul_ue_w", &SystemConfig::power, &PowerModelParams::p_tc_ul_ue_w);
  sub("power.alpha_ap", &SystemConfig::power, &PowerModelParams::alpha_ap);
  sub("power.alpha_ue", &SystemConfig::power, &PowerModelParams::alpha_ue);
  sub("power.bandwidth_hz", &SystemConfig::power, &PowerModelParams::bandwidth_hz);
  num("qos.se_min_dl", &SystemConfig::qos_dl_bits);
  num("qos.se_min_ul", &SystemConfig::qos_ul_bits);
  f["weights.dl"] = Field{[](SystemConfig& c, const std::string& v) { c.weights_dl = parse_list(v); },
                          [](const SystemConfig& c) { return format_list(c.weights_dl); }};
  f["weights.ul"] = Field{[](SystemConfig& c, const std::string& v) { c.weights_ul = parse_list(v); },
                          [](const SystemConfig& c) { return format_list(c.weights_ul); }};
  num("sca.epsilon", &SystemConfig::sca_epsilon);
  num("sca.max_iters", &SystemConfig::sca_max_iters);
  num("sca.margin", &SystemConfig::sca_margin);
  num("sca.solver_tol", &SystemConfig::solver_tol);
  num("mc.trials", &SystemConfig::mc_trials);
  num("mc.drops", &SystemConfig::drops);
  f["mc.master_seed"] = Field{[](SystemConfig& c, const std::string& v) { c.master_seed = std::stoull(v); },
                              [](const SystemConfig& c) { return std::to_string(c.master_seed); }};
  f["experiment.unity_large_scale"] =
      Field{[](SystemConfig& c, const std::string& v) {
              if (v == "true" || v == "1")
                c.unity_large_scale = true;
              else if (v == "false" || v == "0")
                c.unity_large_scale = false;
              else
                throw std::invalid_argument("experiment.unity_large_scale: expected true/false");
            },
            [](const SystemConfig& c) { return c.unity_large_scale ? std::string("true") : std::string("false"); }};
  return f;
}

}  // namespace

SystemConfig parse_config(const std::string& text) {
  SystemConfig cfg;
  auto fields = field_registry();
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument("config line " + std::to_string(lineno) + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    std::string full = section.empty() ? key : section + "." + key;
    auto it = fields.find(full);
    if (it == fields.end())
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": unknown key '" + full + "'");
    try {
      it->second.set(cfg, val);
    } catch (const std::invalid_argument&) {
      throw;
    } catch (const std::exception&) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": bad value for '" + full + "'");
    }
  }
  auto errs = cfg.validate();
  if (!errs.empty()) {
    std::string msg = "invalid config:";
    for (const auto& e : errs) msg += "\n  " + e;
    throw std::invalid_argument(msg);
  }
  return cfg;
}

SystemConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config file not found: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string format_config(const SystemConfig& cfg) {
  auto fields = field_registry();
  std::ostringstream os;
  std::string cur_section;
  // std::map iterates keys sorted, which groups sections.
  for (const auto& [key, field] : fields) {
    auto dot = key.find('.');
    std::string section = key.substr(0, dot);
    std::string name = key.substr(dot + 1);
    std::string val = field.get(cfg);
    if ((name == "dl" || name == "ul") && val.empty()) continue;  // uniform weights
    if (section != cur_section) {
      if (!cur_section.empty()) os << "\n";
      os << "[" << section << "]\n";
      cur_section = section;
    }
    os << name << " = " << val << "\n";
  }
  return os.str();
}

void save_config(const SystemConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write config file: " + path);
  out << format_config(cfg);
}

}  // namespace fdcf
