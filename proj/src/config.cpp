#include "saoi/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"

namespace saoi {

double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
double watt_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }

namespace {

using ojson = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& key, const std::string& what) {
  throw ConfigError(key + ": " + what);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, ',')) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

double to_double(const std::string& key, const std::string& s) {
  const std::string t = trim(s);
  double v = 0.0;
  const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || r.ec != std::errc() || r.ptr != t.data() + t.size() ||
      !std::isfinite(v))
    fail(key, "expected a number, got '" + s + "'");
  return v;
}

long long to_int(const std::string& key, const std::string& s) {
  const double v = to_double(key, s);
  if (v != std::floor(v) || std::fabs(v) > 9.0e15)
    fail(key, "expected an integer, got '" + s + "'");
  return static_cast<long long>(v);
}

std::uint64_t to_u64(const std::string& key, const std::string& s) {
  const std::string t = trim(s);
  std::uint64_t v = 0;
  const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || r.ec != std::errc() || r.ptr != t.data() + t.size())
    fail(key, "expected a non-negative integer, got '" + s + "'");
  return v;
}

bool to_bool(const std::string& key, const std::string& s) {
  const std::string t = trim(s);
  if (t == "true" || t == "1") return true;
  if (t == "false" || t == "0") return false;
  fail(key, "expected true or false, got '" + s + "'");
}

std::vector<double> to_vector(const std::string& key, const std::string& s,
                              std::size_t n) {
  const auto items = split_list(s);
  std::vector<double> v;
  for (const auto& it : items) v.push_back(to_double(key, it));
  if (v.size() == 1) return std::vector<double>(n, v[0]);
  if (v.size() != n)
    fail(key, "expected 1 or " + std::to_string(n) + " entries, got " +
                  std::to_string(v.size()));
  return v;
}

ojson vec_json(const std::vector<double>& v) {
  bool uniform = true;
  for (double x : v) uniform = uniform && x == v.front();
  if (uniform && !v.empty()) return v.front();
  return v;
}

// One accepted key: how to apply its text and how to render it back.
struct KeyDef {
  std::string name;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<ojson(const ExperimentConfig&)> get;  // null: not emitted
};

template <typename T>
KeyDef num_key(const std::string& name, T SimConfig::*field) {
  return {name,
          [=](ExperimentConfig& e, const std::string& s) {
            if constexpr (std::is_same_v<T, int>)
              e.sim.*field = static_cast<int>(to_int(name, s));
            else
              e.sim.*field = to_double(name, s);
          },
          [=](const ExperimentConfig& e) { return ojson(e.sim.*field); }};
}

template <typename T>
KeyDef param_key(const std::string& name, T SystemParams::*field) {
  return {name,
          [=](ExperimentConfig& e, const std::string& s) {
            if constexpr (std::is_same_v<T, int>)
              e.sim.params.*field = static_cast<int>(to_int(name, s));
            else if constexpr (std::is_same_v<T, bool>)
              e.sim.params.*field = to_bool(name, s);
            else
              e.sim.params.*field = to_double(name, s);
          },
          [=](const ExperimentConfig& e) { return ojson(e.sim.params.*field); }};
}

KeyDef gu_vec_key(const std::string& name,
                  std::vector<double> SystemParams::*field) {
  return {name,
          [=](ExperimentConfig& e, const std::string& s) {
            e.sim.params.*field = to_vector(name, s, e.sim.params.K);
          },
          [=](const ExperimentConfig& e) { return vec_json(e.sim.params.*field); }};
}

KeyDef uav_vec_key(const std::string& name,
                   std::vector<double> SystemParams::*field) {
  return {name,
          [=](ExperimentConfig& e, const std::string& s) {
            e.sim.params.*field = to_vector(name, s, e.sim.params.M);
          },
          [=](const ExperimentConfig& e) { return vec_json(e.sim.params.*field); }};
}

template <typename T>
KeyDef ppo_key(const std::string& name, T PpoHyper::*field) {
  const std::string full = "ppo." + name;
  return {full,
          [=](ExperimentConfig& e, const std::string& s) {
            if constexpr (std::is_same_v<T, int>)
              e.sim.ppo.*field = static_cast<int>(to_int(full, s));
            else if constexpr (std::is_same_v<T, bool>)
              e.sim.ppo.*field = to_bool(full, s);
            else
              e.sim.ppo.*field = to_double(full, s);
          },
          [=](const ExperimentConfig& e) { return ojson(e.sim.ppo.*field); }};
}

KeyDef power_key(const std::string& name, double SystemParams::*field,
                 bool dbm) {
  const std::string key = dbm ? name + "_dbm" : name;
  return {key,
          [=](ExperimentConfig& e, const std::string& s) {
            const double v = to_double(key, s);
            e.sim.params.*field = dbm ? dbm_to_watt(v) : v;
          },
          dbm ? std::function<ojson(const ExperimentConfig&)>()
              : [=](const ExperimentConfig& e) { return ojson(e.sim.params.*field); }};
}

const std::vector<KeyDef>& registry() {
  static const std::vector<KeyDef> keys = [] {
    using P = SystemParams;
    std::vector<KeyDef> k;
    // K and M are applied first by resolve_config; listed here for rendering.
    k.push_back(param_key("K", &P::K));
    k.push_back(param_key("M", &P::M));
    k.push_back(param_key("t_max", &P::t_max));
    k.push_back(param_key("v_max", &P::v_max));
    k.push_back(param_key("d_min", &P::d_min));
    k.push_back(param_key("H", &P::H));
    k.push_back(param_key("area_w", &P::area_w));
    k.push_back(param_key("area_h", &P::area_h));
    k.push_back({"bs_x",
                 [](ExperimentConfig& e, const std::string& s) {
                   e.sim.params.bs_pos.x = to_double("bs_x", s);
                 },
                 [](const ExperimentConfig& e) { return ojson(e.sim.params.bs_pos.x); }});
    k.push_back({"bs_y",
                 [](ExperimentConfig& e, const std::string& s) {
                   e.sim.params.bs_pos.y = to_double("bs_y", s);
                 },
                 [](const ExperimentConfig& e) { return ojson(e.sim.params.bs_pos.y); }});
    k.push_back(param_key("xi", &P::xi));
    k.push_back(param_key("g0", &P::g0));
    for (auto [n, f] : {std::pair{"sigma2_uav", &P::sigma2_uav},
                        std::pair{"sigma2_bs", &P::sigma2_bs},
                        std::pair{"p_gu", &P::p_gu},
                        std::pair{"p_uav", &P::p_uav}}) {
      k.push_back(power_key(n, f, false));
      k.push_back(power_key(n, f, true));
    }
    k.push_back(param_key("W_bw", &P::W_bw));
    k.push_back(param_key("a_max", &P::a_max));
    k.push_back(param_key("V", &P::V));
    k.push_back(param_key("w1", &P::w1));
    k.push_back(param_key("w2", &P::w2));
    k.push_back(param_key("gamma_disc", &P::gamma_disc));
    k.push_back(param_key("rho_min", &P::rho_min));
    k.push_back(param_key("relay_size_bits", &P::relay_size_bits));
    k.push_back(param_key("physical_upload", &P::physical_upload));
    for (auto [n, f] : {std::pair{"B0", &P::B0}, std::pair{"B1", &P::B1},
                        std::pair{"B2", &P::B2}, std::pair{"B3", &P::B3},
                        std::pair{"B4", &P::B4}, std::pair{"B5", &P::B5},
                        std::pair{"f_l", &P::f_l}, std::pair{"g_bs", &P::g_bs}})
      k.push_back(gu_vec_key(n, f));
    for (auto [n, f] : {std::pair{"C0", &P::C0}, std::pair{"C1", &P::C1},
                        std::pair{"C2", &P::C2}})
      k.push_back(uav_vec_key(n, f));
    k.push_back({"f_u",
                 [](ExperimentConfig& e, const std::string& s) {
                   const int M = e.sim.params.M, K = e.sim.params.K;
                   const auto flat = to_vector("f_u", s, static_cast<std::size_t>(M) * K);
                   for (int m = 0; m < M; ++m)
                     for (int j = 0; j < K; ++j) e.sim.params.f_u[m][j] = flat[m * K + j];
                 },
                 [](const ExperimentConfig& e) {
                   std::vector<double> flat;
                   for (const auto& row : e.sim.params.f_u)
                     flat.insert(flat.end(), row.begin(), row.end());
                   return vec_json(flat);
                 }});
    k.push_back(num_key("D_min", &SimConfig::D_min));
    k.push_back(num_key("D_max", &SimConfig::D_max));
    k.push_back(num_key("p_gen", &SimConfig::p_gen));
    k.push_back(num_key("R_cov", &SimConfig::R_cov));
    k.push_back(num_key("horizon", &SimConfig::horizon));
    k.push_back(num_key("episodes", &SimConfig::episodes));
    k.push_back(num_key("train_horizon", &SimConfig::train_horizon));
    k.push_back(num_key("update_every", &SimConfig::update_every));
    k.push_back(num_key("reward_scale", &SimConfig::reward_scale));
    k.push_back({"layout_seed",
                 [](ExperimentConfig& e, const std::string& s) {
                   if (trim(s) == "none" || trim(s).empty())
                     e.sim.layout_seed.reset();
                   else
                     e.sim.layout_seed = to_u64("layout_seed", s);
                 },
                 [](const ExperimentConfig& e) {
                   return e.sim.layout_seed ? ojson(*e.sim.layout_seed)
                                            : ojson("none");
                 }});
    k.push_back(num_key("forced_depth", &SimConfig::forced_depth));
    k.push_back(num_key("ao_max_outer", &SimConfig::ao_max_outer));
    k.push_back({"move_uavs",
                 [](ExperimentConfig& e, const std::string& s) {
                   e.sim.move_uavs = to_bool("move_uavs", s);
                 },
                 [](const ExperimentConfig& e) { return ojson(e.sim.move_uavs); }});
    k.push_back(ppo_key("clip_eps", &PpoHyper::clip_eps));
    k.push_back(ppo_key("lr", &PpoHyper::lr));
    k.push_back(ppo_key("epochs", &PpoHyper::epochs));
    k.push_back(ppo_key("minibatch", &PpoHyper::minibatch));
    k.push_back(ppo_key("c_v", &PpoHyper::c_v));
    k.push_back(ppo_key("c_e", &PpoHyper::c_e));
    k.push_back(ppo_key("g_max", &PpoHyper::g_max));
    k.push_back(ppo_key("gamma", &PpoHyper::gamma));
    k.push_back(ppo_key("lambda", &PpoHyper::lambda));
    k.push_back(ppo_key("hidden", &PpoHyper::hidden));
    k.push_back(ppo_key("layers", &PpoHyper::layers));
    k.push_back(ppo_key("kl_penalty", &PpoHyper::kl_penalty));
    k.push_back(ppo_key("kl_target", &PpoHyper::kl_target));
    k.push_back(ppo_key("kl_beta", &PpoHyper::kl_beta));
    k.push_back(ppo_key("init_log_std", &PpoHyper::init_log_std));
    k.push_back({"schemes",
                 [](ExperimentConfig& e, const std::string& s) {
                   e.schemes.clear();
                   for (const auto& n : split_list(s)) {
                     try {
                       e.schemes.push_back(parse_scheme(n));
                     } catch (const std::invalid_argument&) {
                       fail("schemes", "unknown scheme '" + n + "'");
                     }
                   }
                 },
                 [](const ExperimentConfig& e) {
                   ojson a = ojson::array();
                   for (SchemeId s : e.schemes) a.push_back(scheme_name(s));
                   return a;
                 }});
    k.push_back({"seeds",
                 [](ExperimentConfig& e, const std::string& s) {
                   e.seeds.clear();
                   for (const auto& n : split_list(s)) e.seeds.push_back(to_u64("seeds", n));
                 },
                 [](const ExperimentConfig& e) { return ojson(e.seeds); }});
    k.push_back({"sweep",
                 [](ExperimentConfig& e, const std::string& s) {
                   e.sweep = trim(s).empty() ? SweepSpec{} : parse_sweep(s);
                 },
                 [](const ExperimentConfig& e) {
                   if (e.sweep.key.empty()) return ojson("");
                   std::string s = e.sweep.key + "=";
                   for (std::size_t i = 0; i < e.sweep.values.size(); ++i)
                     s += (i ? "," : "") + e.sweep.values[i];
                   return ojson(s);
                 }});
    k.push_back({"jobs",
                 [](ExperimentConfig& e, const std::string& s) {
                   e.jobs = static_cast<int>(to_int("jobs", s));
                 },
                 [](const ExperimentConfig& e) { return ojson(e.jobs); }});
    return k;
  }();
  return keys;
}

const KeyDef* find_key(const std::string& name) {
  for (const KeyDef& k : registry())
    if (k.name == name) return &k;
  return nullptr;
}

bool is_experiment_key(const std::string& k) {
  return k == "schemes" || k == "seeds" || k == "sweep" || k == "jobs";
}

void flatten(const ojson& j, const std::string& prefix, ConfigDoc* out) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it)
      flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
    return;
  }
  if (prefix.empty()) fail("<root>", "expected a JSON object");
  // sweep given as {"key": ..., "values": [...]}
  auto text = [&](const ojson& v) -> std::string {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number()) return v.dump();
    if (v.is_null()) fail(prefix, "null is not allowed");
    fail(prefix, "unsupported value " + v.dump());
  };
  std::string s;
  if (j.is_array()) {
    bool first = true;
    std::function<void(const ojson&)> walk = [&](const ojson& a) {
      for (const auto& x : a) {
        if (x.is_array()) {
          walk(x);
          continue;
        }
        s += (first ? "" : ",") + text(x);
        first = false;
      }
    };
    walk(j);
  } else {
    s = text(j);
  }
  if (out->count(prefix)) fail(prefix, "given twice");
  (*out)[prefix] = s;
}

}  // namespace

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const KeyDef& k : registry()) out.push_back(k.name);
  return out;
}

SweepSpec parse_sweep(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) fail("sweep", "expected key=v1,v2,...");
  SweepSpec s;
  s.key = trim(text.substr(0, eq));
  s.values = split_list(text.substr(eq + 1));
  if (s.key.empty() || s.values.empty()) fail("sweep", "expected key=v1,v2,...");
  if (!find_key(s.key) || is_experiment_key(s.key))
    fail("sweep", "cannot sweep over '" + s.key + "'");
  return s;
}

ConfigDoc parse_config_text(const std::string& text) {
  ConfigDoc doc;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    ojson j;
    try {
      j = ojson::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      fail("<json>", e.what());
    }
    flatten(j, "", &doc);
  } else {
    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.resize(hash);
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[' && line.back() == ']') {
        section = trim(line.substr(1, line.size() - 2));
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        fail("line " + std::to_string(lineno), "expected key = value");
      std::string key = trim(line.substr(0, eq));
      if (!section.empty()) key = section + "." + key;
      if (doc.count(key)) fail(key, "given twice");
      doc[key] = trim(line.substr(eq + 1));
    }
  }
  // sweep.key / sweep.values form
  if (doc.count("sweep.key") || doc.count("sweep.values")) {
    if (doc.count("sweep")) fail("sweep", "given twice");
    doc["sweep"] = doc["sweep.key"] + "=" + doc["sweep.values"];
    doc.erase("sweep.key");
    doc.erase("sweep.values");
  }
  for (const auto& [k, v] : doc)
    if (!find_key(k)) fail(k, "unknown key");
  return doc;
}

ConfigDoc load_config_doc(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(path, "cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

ExperimentConfig resolve_config(const ConfigDoc& doc) {
  for (const auto& [k, v] : doc)
    if (!find_key(k)) fail(k, "unknown key");
  for (const char* n : {"sigma2_uav", "sigma2_bs", "p_gu", "p_uav"})
    if (doc.count(n) && doc.count(std::string(n) + "_dbm"))
      fail(std::string(n) + "_dbm", std::string("conflicts with ") + n);
  ExperimentConfig e;
  SystemParams& p = e.sim.params;
  if (doc.count("K")) find_key("K")->set(e, doc.at("K"));
  if (doc.count("M")) find_key("M")->set(e, doc.at("M"));
  if (p.K < 1) fail("K", "must be >= 1");
  if (p.M < 1) fail("M", "must be >= 1");
  if (doc.count("K") || doc.count("M")) {
    const SystemParams d = default_params();
    p.resize_with(d.B0[0], d.B1[0], d.B2[0], d.B3[0], d.B4[0], d.B5[0],
                  d.C0[0], d.C1[0], d.C2[0], d.f_l[0], d.f_u[0][0], d.g_bs[0]);
  }
  for (const KeyDef& k : registry()) {
    if (k.name == "K" || k.name == "M") continue;
    const auto it = doc.find(k.name);
    if (it != doc.end()) k.set(e, it->second);
  }
  try {
    e.sim.validate();
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(ex.what());
  }
  if (e.schemes.empty()) fail("schemes", "must not be empty");
  if (e.seeds.empty()) fail("seeds", "must not be empty");
  if (e.jobs < 1) fail("jobs", "must be >= 1");
  if (!e.sweep.key.empty()) {
    for (const auto& v : e.sweep.values) {
      ConfigDoc cell = doc;
      cell.erase("sweep");
      cell[e.sweep.key] = v;
      resolve_config(cell);
    }
  }
  return e;
}

ExperimentConfig load_config(const std::string& path) {
  return resolve_config(load_config_doc(path));
}

std::string config_to_json(const ExperimentConfig& cfg) {
  ojson j = ojson::object();
  for (const KeyDef& k : registry()) {
    if (!k.get) continue;
    const ojson v = k.get(cfg);
    if (k.name.rfind("ppo.", 0) == 0)
      j["ppo"][k.name.substr(4)] = v;
    else
      j[k.name] = v;
  }
  return j.dump(2);
}

}  // namespace saoi
