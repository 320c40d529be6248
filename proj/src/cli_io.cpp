#include "kerrdecay/cli_io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <chrono>
#include <cstring>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "json.hpp"
#include "kerrdecay/geometry.hpp"
#include "kerrdecay/multipliers.hpp"
#include "kerrdecay/operators.hpp"

#ifndef KERRDECAY_VERSION
#define KERRDECAY_VERSION "dev"
#endif

namespace kerrdecay {

namespace {

std::string join(const std::vector<std::string>& errors) {
  std::string s = "invalid config:";
  for (const auto& e : errors) s += "\n  - " + e;
  return s;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

bool parse_double(const std::string& text, double& out) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  const char* end = t.data() + t.size();
  const auto res = std::from_chars(t.data(), end, out);
  return res.ec == std::errc() && res.ptr == end && std::isfinite(out);
}

std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fmt_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
  return s;
}

using Setter = std::function<std::string(RunConfig&, const std::string&)>;
using Getter = std::function<std::string(const RunConfig&)>;

struct Key {
  Setter set;
  Getter get;
};

// Setters return an error message or "".
template <class Ref>
Key number(Ref ref) {
  return {[ref](RunConfig& c, const std::string& v) -> std::string {
            double x = 0.0;
            if (!parse_double(v, x)) return "not a number: '" + v + "'";
            ref(c) = x;
            return "";
          },
          [ref](const RunConfig& c) { return fmt(ref(const_cast<RunConfig&>(c))); }};
}

template <class Ref>
Key count(Ref ref) {
  return {[ref](RunConfig& c, const std::string& v) -> std::string {
            double x = 0.0;
            if (!parse_double(v, x) || x < 0.0 || x != std::floor(x)) return "not a non-negative integer: '" + v + "'";
            ref(c) = static_cast<std::remove_reference_t<decltype(ref(c))>>(x);
            return "";
          },
          [ref](const RunConfig& c) { return std::to_string(ref(const_cast<RunConfig&>(c))); }};
}

template <class Ref>
Key flag(Ref ref) {
  return {[ref](RunConfig& c, const std::string& v) -> std::string {
            const std::string t = trim(v);
            if (t == "true" || t == "1" || t == "on") {
              ref(c) = true;
            } else if (t == "false" || t == "0" || t == "off") {
              ref(c) = false;
            } else {
              return "not a boolean: '" + v + "'";
            }
            return "";
          },
          [ref](const RunConfig& c) { return std::string(ref(const_cast<RunConfig&>(c)) ? "true" : "false"); }};
}

template <class Ref>
Key list(Ref ref) {
  return {[ref](RunConfig& c, const std::string& v) -> std::string {
            std::vector<double> out;
            std::string item;
            std::istringstream is(v);
            while (std::getline(is, item, ',')) {
              if (trim(item).empty()) continue;
              double x = 0.0;
              if (!parse_double(item, x)) return "not a number list: '" + v + "'";
              out.push_back(x);
            }
            ref(c) = out;
            return "";
          },
          [ref](const RunConfig& c) { return fmt_list(ref(const_cast<RunConfig&>(c))); }};
}

#define FIELD(expr) [](RunConfig& c) -> auto& { return expr; }

const std::map<std::string, Key>& keys() {
  static const std::map<std::string, Key> table = {
      {"background.M", number(FIELD(c.evolution.params.M))},
      {"background.a", number(FIELD(c.evolution.params.a))},
      {"background.r_e", number(FIELD(c.evolution.r_e))},
      {"background.R_switch", number(FIELD(c.evolution.R_switch))},
      {"grid.engine",
       {[](RunConfig& c, const std::string& v) -> std::string {
          const std::string t = trim(v);
          if (t == "E1") {
            c.evolution.engine = Engine::E1;
          } else if (t == "E2") {
            c.evolution.engine = Engine::E2;
          } else {
            return "engine must be E1 or E2, got '" + v + "'";
          }
          return "";
        },
        [](const RunConfig& c) { return engine_name(c.evolution.engine); }}},
      {"grid.rstar_min", number(FIELD(c.evolution.rstar_min))},
      {"grid.rstar_max", number(FIELD(c.evolution.rstar_max))},
      {"grid.h", number(FIELD(c.evolution.h))},
      {"grid.r_out", number(FIELD(c.evolution.r_out))},
      {"grid.h_r", number(FIELD(c.evolution.h_r))},
      {"grid.n_theta", count(FIELD(c.evolution.n_theta))},
      {"grid.cfl", number(FIELD(c.evolution.cfl))},
      {"grid.ko_sigma", number(FIELD(c.evolution.ko_sigma))},
      {"data.epsilon", number(FIELD(c.evolution.data.epsilon))},
      {"data.center", number(FIELD(c.evolution.data.center))},
      {"data.width", number(FIELD(c.evolution.data.width))},
      {"data.time_symmetric", flag(FIELD(c.evolution.data.time_symmetric))},
      {"data.R1", number(FIELD(c.evolution.R1))},
      {"nonlinearity.enabled", flag(FIELD(c.evolution.nl.enabled))},
      {"nonlinearity.p",
       {[](RunConfig& c, const std::string& v) -> std::string {
          double x = 0.0;
          if (!parse_double(v, x) || x != std::floor(x)) return "p must be an integer, got '" + v + "'";
          c.evolution.nl.p = static_cast<int>(x);
          return "";
        },
        [](const RunConfig& c) { return std::to_string(c.evolution.nl.p); }}},
      {"nonlinearity.sign",
       {[](RunConfig& c, const std::string& v) -> std::string {
          const std::string t = trim(v);
          if (t == "1" || t == "+1" || t == "defocusing") {
            c.evolution.nl.sign = 1;
          } else if (t == "-1" || t == "focusing") {
            c.evolution.nl.sign = -1;
          } else {
            return "sign must be +1 or -1, got '" + v + "'";
          }
          return "";
        },
        [](const RunConfig& c) { return std::to_string(c.evolution.nl.sign); }}},
      {"output.T_final", number(FIELD(c.evolution.T_final))},
      {"output.dt_out", number(FIELD(c.evolution.dt_out))},
      {"output.cut_times", list(FIELD(c.evolution.cut_times))},
      {"output.snapshot_times", list(FIELD(c.evolution.snapshot_times))},
      {"output.gammas", list(FIELD(c.evolution.gammas))},
      {"output.monitor_norms", flag(FIELD(c.evolution.monitor_norms))},
      {"output.le_windows", list(FIELD(c.le_windows))},
      {"probes.x", list(FIELD(c.evolution.probe_x))},
      {"probes.u", list(FIELD(c.evolution.probe_u))},
      {"analysis.t_min", number(FIELD(c.analysis.t_min))},
      {"analysis.t_max", number(FIELD(c.analysis.t_max))},
      {"analysis.interior_tol", number(FIELD(c.analysis.interior_tol))},
      {"analysis.cone_time", number(FIELD(c.analysis.cone_time))},
      {"analysis.u_min", number(FIELD(c.analysis.u_min))},
      {"analysis.u_max", number(FIELD(c.analysis.u_max))},
      {"analysis.cone_samples", count(FIELD(c.analysis.cone_samples))},
      {"analysis.cone_tol", number(FIELD(c.analysis.cone_tol))},
      {"analysis.min_samples", count(FIELD(c.analysis.fit.min_samples))},
      {"analysis.min_decades", number(FIELD(c.analysis.fit.min_decades))},
      {"analysis.floor", number(FIELD(c.analysis.fit.floor))},
      {"multipliers.gamma", number(FIELD(c.multipliers.gamma))},
      {"multipliers.delta", number(FIELD(c.multipliers.delta))},
      {"multipliers.R2", number(FIELD(c.multipliers.R2))},
      {"multipliers.radii", list(FIELD(c.multipliers.radii))},
      {"multipliers.steps", list(FIELD(c.multipliers.steps))},
  };
  return table;
}

#undef FIELD

}  // namespace

ConfigError::ConfigError(std::vector<std::string> errors)
    : std::runtime_error(join(errors)), errors_(std::move(errors)) {}

RunConfig parse_config(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream is(text);
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError({std::string("syntax: ") + e.what()});
  }
  RunConfig c;
  std::vector<std::string> errors;
  const auto& table = keys();
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      errors.push_back("key '" + section + "' outside any section");
      continue;
    }
    for (const auto& [key, value] : body) {
      const std::string name = section + "." + key;
      const auto it = table.find(name);
      if (it == table.end()) {
        errors.push_back("unknown key [" + section + "] " + key);
        continue;
      }
      const std::string err = it->second.set(c, value.data());
      if (!err.empty()) errors.push_back("[" + section + "] " + key + ": " + err);
    }
  }
  if (errors.empty()) {
    try {
      validate(c.evolution);
    } catch (const ParameterError& e) {
      std::istringstream is(e.what());
      std::string line;
      while (std::getline(is, line)) {
        const auto pos = line.find("- ");
        if (pos != std::string::npos) errors.push_back(line.substr(pos + 2));
      }
    }
    for (double t1 : c.le_windows) {
      if (!(t1 > 0.0 && t1 <= c.evolution.T_final)) {
        errors.push_back("[output] le_windows entry " + fmt(t1) + " outside (0, [output] T_final]");
      }
    }
  }
  if (!errors.empty()) throw ConfigError(errors);
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot read " + path.string()});
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& config) {
  std::ostringstream os;
  std::string section;
  for (const auto& [name, key] : keys()) {
    const auto dot = name.find('.');
    const std::string s = name.substr(0, dot);
    if (s != section) {
      os << (section.empty() ? "" : "\n") << '[' << s << "]\n";
      section = s;
    }
    os << name.substr(dot + 1) << " = " << key.get(config) << '\n';
  }
  return os.str();
}

// ------------------------------------------------------------- snapshots

namespace {

constexpr char kMagic[8] = {'K', 'D', 'S', 'N', 'A', 'P', '1', '\0'};
constexpr std::uint32_t kOrderMark = 0x01020304U;

template <class T>
void put(std::vector<unsigned char>& out, T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  out.insert(out.end(), b, b + sizeof(T));
}

template <class T>
T get(const std::vector<unsigned char>& in, std::size_t& pos, bool swap) {
  if (pos + sizeof(T) > in.size()) throw SnapshotError("snapshot truncated at byte " + std::to_string(pos));
  unsigned char b[sizeof(T)];
  std::memcpy(b, in.data() + pos, sizeof(T));
  if (swap) std::reverse(b, b + sizeof(T));
  pos += sizeof(T);
  T v;
  std::memcpy(&v, b, sizeof(T));
  return v;
}

std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SnapshotError("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

std::vector<unsigned char> encode_snapshot(const FieldSlice& slice, Engine engine) {
  if (slice.phi.size() != slice.pi.size()) throw SnapshotError("snapshot: phi and pi differ in length");
  std::vector<unsigned char> out(kMagic, kMagic + 8);
  put(out, kOrderMark);
  put(out, static_cast<std::uint32_t>(engine));
  put(out, slice.time);
  put(out, static_cast<std::uint64_t>(slice.phi.size()));
  for (double v : slice.phi) put(out, v);
  for (double v : slice.pi) put(out, v);
  return out;
}

FieldSlice decode_snapshot(const std::vector<unsigned char>& bytes, Engine* engine) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 8) != 0) {
    throw SnapshotError("snapshot: bad magic (expected KDSNAP1)");
  }
  std::size_t pos = 8;
  const auto mark = get<std::uint32_t>(bytes, pos, false);
  bool swap = false;
  if (mark == 0x04030201U) {
    swap = true;
  } else if (mark != kOrderMark) {
    throw SnapshotError("snapshot: unknown byte-order mark");
  }
  const auto e = get<std::uint32_t>(bytes, pos, swap);
  if (e != 1U && e != 2U) throw SnapshotError("snapshot: unknown engine " + std::to_string(e));
  if (engine != nullptr) *engine = static_cast<Engine>(e);
  FieldSlice s;
  s.time = get<double>(bytes, pos, swap);
  const auto n = get<std::uint64_t>(bytes, pos, swap);
  if (n > (bytes.size() - pos) / 16) throw SnapshotError("snapshot truncated: header promises " + std::to_string(n) + " points");
  s.phi.resize(n);
  s.pi.resize(n);
  for (auto& v : s.phi) v = get<double>(bytes, pos, swap);
  for (auto& v : s.pi) v = get<double>(bytes, pos, swap);
  if (pos != bytes.size()) throw SnapshotError("snapshot: trailing bytes");
  return s;
}

void save_snapshot(const std::filesystem::path& path, const FieldSlice& slice, Engine engine) {
  const auto bytes = encode_snapshot(slice, engine);
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw SnapshotError("cannot write " + path.string());
}

FieldSlice load_snapshot(const std::filesystem::path& path, Engine* engine) {
  return decode_snapshot(read_bytes(path), engine);
}

std::string probe_csv(const std::vector<ProbeSample>& probes) {
  std::ostringstream os;
  os.precision(17);
  os << "t,station_id,phi,dphi_dt,dphi_dr\n";
  for (const auto& p : probes) os << p.t << ',' << p.station << ',' << p.phi << ',' << p.dphi_dt << ',' << p.dphi_dr << '\n';
  return os.str();
}

// ------------------------------------------------------------- manifest

std::string code_version() { return KERRDECAY_VERSION; }

ArtifactWriter::ArtifactWriter(std::filesystem::path dir, RunManifest& manifest)
    : dir_(std::move(dir)), manifest_(manifest) {
  std::filesystem::create_directories(dir_);
}

void ArtifactWriter::write(const std::string& name, const std::string& text) {
  write(name, std::vector<unsigned char>(text.begin(), text.end()));
}

void ArtifactWriter::write(const std::string& name, const std::vector<unsigned char>& bytes) {
  std::ofstream out(dir_ / name, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  out.close();
  if (!out) throw std::runtime_error("cannot write " + (dir_ / name).string());
  manifest_.files.push_back({name, num::hex64(num::fnv1a64(bytes)), bytes.size()});
}

std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_manifest(const std::filesystem::path& out_dir, const RunManifest& m) {
  nlohmann::ordered_json j;
  j["subcommand"] = m.subcommand;
  j["config_hash"] = m.config_hash;
  j["code_version"] = m.code_version;
  j["start_time"] = m.start_time;
  j["end_time"] = m.end_time;
  j["outcome"] = m.outcome;
  j["message"] = m.message;
  if (m.outcome == "blow-up") j["blowup"] = {{"time", m.blowup_time}, {"location", m.blowup_location}};
  j["files"] = nlohmann::json::array();
  for (const auto& f : m.files) j["files"].push_back({{"name", f.name}, {"fnv1a64", f.checksum}, {"bytes", f.bytes}});
  std::filesystem::create_directories(out_dir);
  const auto tmp = out_dir / "manifest.json.tmp";
  {
    std::ofstream out(tmp);
    out << j.dump(2) << '\n';
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, out_dir / "manifest.json");
}

RunManifest read_manifest(const std::filesystem::path& out_dir) {
  std::ifstream in(out_dir / "manifest.json");
  if (!in) throw std::runtime_error("no manifest in " + out_dir.string());
  const auto j = nlohmann::json::parse(in);
  RunManifest m;
  m.subcommand = j.at("subcommand");
  m.config_hash = j.at("config_hash");
  m.code_version = j.at("code_version");
  m.start_time = j.at("start_time");
  m.end_time = j.at("end_time");
  m.outcome = j.at("outcome");
  m.message = j.at("message");
  if (j.contains("blowup")) {
    m.blowup_time = j["blowup"].at("time");
    m.blowup_location = j["blowup"].at("location");
  }
  for (const auto& f : j.at("files")) m.files.push_back({f.at("name"), f.at("fnv1a64"), f.at("bytes")});
  return m;
}

// ------------------------------------------------------------- pipelines

namespace {

std::string stations_csv(const std::vector<StationInfo>& stations) {
  std::ostringstream os;
  os.precision(17);
  os << "station_id,kind,position,clean_until\n";
  for (const auto& s : stations) {
    os << s.id << ',' << (s.kind == StationKind::Interior ? "interior" : "cone") << ',' << s.position << ','
       << s.clean_until << '\n';
  }
  return os.str();
}

std::string energy_csv(const std::vector<NormSample>& norms, const std::vector<double>& gammas) {
  std::ostringstream os;
  os.precision(17);
  os << "t,E";
  for (double g : gammas) os << ",E_gamma_" << fmt(g);
  os << '\n';
  for (const auto& n : norms) {
    os << n.t << ',' << n.E;
    for (double v : n.E_gamma) os << ',' << v;
    os << '\n';
  }
  return os.str();
}

std::string cut_csv(const RadialCut& c) {
  std::ostringstream os;
  os.precision(17);
  os << "r,rtilde,phi,dphi_dt,clean\n";
  for (std::size_t i = 0; i < c.r.size(); ++i) {
    os << c.r[i] << ',' << c.rtilde[i] << ',' << c.phi[i] << ',' << c.dphi_dt[i] << ','
       << (c.clean.empty() ? 1 : int(c.clean[i])) << '\n';
  }
  return os.str();
}

EvolutionResult evolve_and_store(const RunConfig& config, ArtifactWriter& w, RunManifest& m) {
  EvolutionResult r = evolve(config.evolution);
  w.write("stations.csv", stations_csv(r.stations));
  w.write("probes.csv", probe_csv(r.probes));
  if (config.evolution.monitor_norms) w.write("energy.csv", energy_csv(r.norms, config.evolution.gammas));
  for (const auto& c : r.cuts) w.write("cut_t" + fmt(c.t) + ".csv", cut_csv(c));
  for (const auto& s : r.snapshots) w.write("snap_t" + fmt(s.time) + ".kdsnap", encode_snapshot(s, config.evolution.engine));
  if (r.outcome == Outcome::BlowUp) {
    m.outcome = "blow-up";
    m.blowup_time = r.blowup_time;
    m.blowup_location = r.blowup_location;
    m.message = r.message;
  }
  return r;
}

void norms_pipeline(const RunConfig& config, ArtifactWriter& w, RunManifest& m) {
  RunConfig c = config;
  c.evolution.monitor_norms = true;
  const EvolutionResult r = evolve_and_store(c, w, m);
  if (r.outcome != Outcome::Completed) return;
  std::ostringstream os;
  os.precision(17);
  os << "t0,t1,name,gamma_or_R,value\n";
  std::vector<double> windows = c.le_windows;
  if (windows.empty()) windows.push_back(c.evolution.T_final);
  for (double t1 : windows) {
    const NormReport n = r.le.window(0.0, t1);
    const auto row = [&](const char* name, double key, double value) {
      os << n.t0 << ',' << n.t1 << ',' << name << ',' << key << ',' << value << '\n';
    };
    row("E", 0.0, n.E);
    const auto at = std::min_element(r.norms.begin(), r.norms.end(), [&](const NormSample& x, const NormSample& y) {
      return std::abs(x.t - t1) < std::abs(y.t - t1);
    });
    if (at != r.norms.end()) {
      for (std::size_t g = 0; g < c.evolution.gammas.size() && g < at->E_gamma.size(); ++g) {
        row("E_gamma", c.evolution.gammas[g], at->E_gamma[g]);
      }
    }
    for (std::size_t k = 0; k < n.LE_annulus.size(); ++k) row("LE_annulus", AnnulusDecomposition::radius(k), n.LE_annulus[k]);
    row("LE", 0.0, n.LE);
    row("LE1", 0.0, n.LE1);
    row("LE1_weak", 0.0, n.LE1_weak);
    row("LE_star", 0.0, n.LE_star);
    row("LE_star_weak", 0.0, n.LE_star_weak);
  }
  w.write("norms.csv", os.str());
}

void fit_pipeline(const RunConfig& config, ArtifactWriter& w, RunManifest& m) {
  const EvolutionResult r = evolve_and_store(config, w, m);
  if (r.outcome != Outcome::Completed) return;
  const int p = config.evolution.nl.enabled ? config.evolution.nl.p : 3;
  const TheoremReport rep = verify_theorem(r, p, config.analysis);
  w.write("verdicts.csv", verdict_csv(m.config_hash, rep.rows));
  m.message = rep.vacuous ? "vacuous pass" : (rep.pass ? "pass" : "fail");
}

void convergence_pipeline(const RunConfig& config, ArtifactWriter& w, RunManifest&) {
  std::vector<EvolutionResult> runs;
  for (int k = 0; k < 3; ++k) {
    EvolutionConfig c = config.evolution;
    c.monitor_norms = false;
    c.cut_times.clear();
    c.snapshot_times.clear();
    const double s = std::ldexp(1.0, -k);
    c.h *= s;
    c.h_r *= s;
    runs.push_back(evolve(c));
    if (runs.back().outcome != Outcome::Completed) throw std::runtime_error("convergence: run blew up");
  }
  std::ostringstream os;
  os.precision(10);
  os << "station_id,median_order,samples,degenerate,collapsed\n";
  for (const auto& st : runs[0].stations) {
    TimeSeries s[3];
    for (int k = 0; k < 3; ++k) s[k] = clean_series(runs[k], st.id, ProbeQuantity::Phi);
    const std::size_t n = std::min({s[0].t.size(), s[1].t.size(), s[2].t.size()});
    for (auto& x : s) x.t.resize(n), x.v.resize(n);
    const ConvergenceReport rep = convergence_order(s[0], s[1], s[2]);
    os << st.id << ',' << rep.median << ',' << rep.order.size() << ',' << rep.degenerate << ',' << rep.collapsed
       << '\n';
  }
  w.write("convergence.csv", os.str());
}

void geometry_pipeline(const RunConfig& config, ArtifactWriter& w) {
  const RadialMaps maps(config.evolution.params, config.evolution.R_switch, config.evolution.r_e);
  std::ostringstream os;
  os.precision(10);
  os << "check_name,worst_point_r,worst_point_theta,residual,pass\n";
  for (const auto& row : geometry_checks(config.evolution.params, maps)) {
    os << row.name << ',' << row.worst_r << ',' << row.worst_theta << ',' << row.residual << ',' << row.pass << '\n';
  }
  w.write("geometry.csv", os.str());
}

void operators_pipeline(const RunConfig& config, ArtifactWriter& w) {
  const RadialMaps maps(config.evolution.params, config.evolution.R_switch, config.evolution.r_e);
  std::vector<double> radii;
  for (int i = 0; i <= 60; ++i) radii.push_back(10.0 * std::pow(10.0, 3.0 * i / 60.0));
  const ConjugationReport rep = conjugation_check(config.evolution.params, maps, radii);
  std::ostringstream os;
  os.precision(10);
  os << "r,r3_glr,r3_V,r2_gsr_max\n";
  for (const auto& row : rep.rows) os << row.r << ',' << row.r3_glr << ',' << row.r3_V << ',' << row.r2_gsr_max << '\n';
  w.write("operators.csv", os.str());
}

void multipliers_pipeline(const RunConfig& config, ArtifactWriter& w) {
  const KerrParams& K = config.evolution.params;
  const RadialMaps maps(K, config.evolution.R_switch, config.evolution.r_e);
  const MultiplierSettings& s = config.multipliers;
  const MultiplierTriple triple(s.gamma, s.delta, K.M, s.R2);
  w.write("multipliers.csv", multiplier_csv(multiplier_convergence(K, maps, triple, oscillatory_field(), s.radii, s.steps)));
}

}  // namespace

RunManifest run(const std::string& subcommand, const RunConfig& config, const std::filesystem::path& out_dir) {
  RunManifest m;
  m.subcommand = subcommand;
  m.config_hash = num::hex64(num::fnv1a64(serialize_config(config)));
  m.code_version = code_version();
  m.start_time = utc_timestamp();
  m.outcome = "completed";
  std::filesystem::remove(out_dir / "manifest.json");
  ArtifactWriter w(out_dir, m);
  try {
    w.write("config.ini", serialize_config(config));
    if (subcommand == "evolve") {
      evolve_and_store(config, w, m);
    } else if (subcommand == "norms") {
      norms_pipeline(config, w, m);
    } else if (subcommand == "fit") {
      fit_pipeline(config, w, m);
    } else if (subcommand == "convergence") {
      convergence_pipeline(config, w, m);
    } else if (subcommand == "check-geometry") {
      geometry_pipeline(config, w);
    } else if (subcommand == "check-operators") {
      operators_pipeline(config, w);
    } else if (subcommand == "check-multipliers") {
      multipliers_pipeline(config, w);
    } else {
      throw ParameterError("unknown subcommand '" + subcommand + "'");
    }
  } catch (const std::exception& e) {
    m.outcome = "error";
    m.message = e.what();
  }
  m.end_time = utc_timestamp();
  write_manifest(out_dir, m);
  return m;
}

}  // namespace kerrdecay
