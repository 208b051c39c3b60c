#include "kwave/cli_io.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <iomanip>
#include <optional>
#include <sstream>

#include <omp.h>

#ifndef KWAVE_VERSION
#define KWAVE_VERSION "0.0.0"
#endif

namespace kwave::io {

namespace fs = std::filesystem;
using nlohmann::json;
using solver::CollisionMode;
using solver::PerturbationKind;
using solver::Reconstruction;
using solver::SpeciesMode;

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end || !std::isfinite(out)) throw ConfigError("expected a number, got '" + v + "'");
  return out;
}

long long to_integer(const std::string& v) {
  long long out = 0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError("expected an integer, got '" + v + "'");
  return out;
}

double positive(const std::string& v) {
  const double x = to_double(v);
  if (!(x > 0.0)) throw ConfigError("value must be positive, got " + v);
  return x;
}

double nonnegative(const std::string& v) {
  const double x = to_double(v);
  if (x < 0.0) throw ConfigError("value must be nonnegative, got " + v);
  return x;
}

int int_at_least(const std::string& v, long long lo) {
  const long long x = to_integer(v);
  if (x < lo || x > 1'000'000'000) throw ConfigError("value must be an integer >= " + std::to_string(lo) + ", got " + v);
  return static_cast<int>(x);
}

template <class E>
E choice(const std::string& v, const std::vector<std::pair<std::string, E>>& options) {
  std::string names;
  for (const auto& [name, value] : options) {
    if (name == v) return value;
    names += (names.empty() ? "" : " | ") + name;
  }
  throw ConfigError("expected one of " + names + ", got '" + v + "'");
}

const std::vector<std::pair<std::string, Geometry>> kGeometries = {{"line", Geometry::line}, {"duct", Geometry::duct}};
const std::vector<std::pair<std::string, CollisionMode>> kCollisions = {
    {"bgk", CollisionMode::bgk}, {"boltzmann_quadrature", CollisionMode::boltzmann_quadrature}, {"none", CollisionMode::none}};
const std::vector<std::pair<std::string, SpeciesMode>> kSpecies = {{"single", SpeciesMode::single},
                                                                   {"two_species_vpb", SpeciesMode::two_species_vpb}};
const std::vector<std::pair<std::string, field::XBoundary>> kXBoundary = {{"neumann", field::XBoundary::neumann},
                                                                          {"periodic", field::XBoundary::periodic}};
const std::vector<std::pair<std::string, Reconstruction>> kReconstruction = {{"upwind", Reconstruction::upwind},
                                                                             {"minmod", Reconstruction::minmod}};
const std::vector<std::pair<std::string, PerturbationKind>> kPerturbations = {
    {"none", PerturbationKind::none},       {"b11", PerturbationKind::b11},
    {"b12", PerturbationKind::b12},         {"density_bump", PerturbationKind::density_bump},
    {"bimodal", PerturbationKind::bimodal}, {"random", PerturbationKind::random}};

template <class E>
std::string name_of(E value, const std::vector<std::pair<std::string, E>>& options) {
  for (const auto& [name, v] : options)
    if (v == value) return name;
  return "?";
}

/// Values collected before they can be turned into end states.
struct WaveInput {
  std::optional<double> rho_minus, u_minus, theta_minus, w_minus;
  int minus_line = 0;
  int w_line = 0;
};

using Setter = std::function<void(Scenario&, WaveInput&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"mesh.geometry", [](Scenario& s, WaveInput&, const std::string& v) { s.mesh.geometry = choice(v, kGeometries); }},
      {"mesh.x_min", [](Scenario& s, WaveInput&, const std::string& v) { s.mesh.x_min = to_double(v); }},
      {"mesh.x_max", [](Scenario& s, WaveInput&, const std::string& v) { s.mesh.x_max = to_double(v); }},
      {"mesh.nx", [](Scenario& s, WaveInput&, const std::string& v) { s.mesh.nx = int_at_least(v, 1); }},
      {"mesh.y_min", [](Scenario& s, WaveInput&, const std::string& v) { s.mesh.y_min = to_double(v); }},
      {"mesh.y_max", [](Scenario& s, WaveInput&, const std::string& v) { s.mesh.y_max = to_double(v); }},
      {"mesh.ny", [](Scenario& s, WaveInput&, const std::string& v) { s.mesh.ny = int_at_least(v, 1); }},

      {"grid.half_width", [](Scenario& s, WaveInput&, const std::string& v) { s.v_half_width = positive(v); }},
      {"grid.points", [](Scenario& s, WaveInput&, const std::string& v) { s.v_points = int_at_least(v, 4); }},
      {"grid.center_v1", [](Scenario& s, WaveInput&, const std::string& v) { s.v_center[0] = to_double(v); }},
      {"grid.center_v2", [](Scenario& s, WaveInput&, const std::string& v) { s.v_center[1] = to_double(v); }},
      {"grid.center_v3", [](Scenario& s, WaveInput&, const std::string& v) { s.v_center[2] = to_double(v); }},

      {"kernel.gamma", [](Scenario& s, WaveInput&, const std::string& v) { s.kernel.gamma = to_double(v); }},
      {"kernel.s", [](Scenario& s, WaveInput&, const std::string& v) { s.kernel.s = to_double(v); }},
      {"kernel.theta_min", [](Scenario& s, WaveInput&, const std::string& v) { s.kernel.theta_min = positive(v); }},
      {"kernel.n_theta", [](Scenario& s, WaveInput&, const std::string& v) { s.kernel.n_theta = int_at_least(v, 1); }},
      {"kernel.n_phi", [](Scenario& s, WaveInput&, const std::string& v) { s.kernel.n_phi = int_at_least(v, 1); }},
      {"kernel.work_budget", [](Scenario& s, WaveInput&, const std::string& v) { s.kernel.work_budget = positive(v); }},

      {"collision.mode", [](Scenario& s, WaveInput&, const std::string& v) { s.collision = choice(v, kCollisions); }},
      {"collision.viscosity", [](Scenario& s, WaveInput&, const std::string& v) { s.viscosity = positive(v); }},
      {"collision.viscosity_exponent",
       [](Scenario& s, WaveInput&, const std::string& v) { s.viscosity_exponent = to_double(v); }},

      {"species.mode", [](Scenario& s, WaveInput&, const std::string& v) { s.species = choice(v, kSpecies); }},
      {"species.x_boundary", [](Scenario& s, WaveInput&, const std::string& v) { s.x_boundary = choice(v, kXBoundary); }},

      {"wave.rho_plus", [](Scenario& s, WaveInput&, const std::string& v) { s.plus.rho = positive(v); }},
      {"wave.u_plus", [](Scenario& s, WaveInput&, const std::string& v) { s.plus.u1 = to_double(v); }},
      {"wave.theta_plus", [](Scenario& s, WaveInput&, const std::string& v) { s.plus.theta = positive(v); }},
      {"wave.strength", [](Scenario& s, WaveInput&, const std::string& v) { s.strength = nonnegative(v); }},
      {"wave.rho_minus", [](Scenario&, WaveInput& w, const std::string& v) { w.rho_minus = positive(v); }},
      {"wave.u_minus", [](Scenario&, WaveInput& w, const std::string& v) { w.u_minus = to_double(v); }},
      {"wave.theta_minus", [](Scenario&, WaveInput& w, const std::string& v) { w.theta_minus = positive(v); }},
      {"wave.w_minus", [](Scenario&, WaveInput& w, const std::string& v) { w.w_minus = to_double(v); }},

      {"perturbation.kind",
       [](Scenario& s, WaveInput&, const std::string& v) { s.perturbation.kind = choice(v, kPerturbations); }},
      {"perturbation.amplitude",
       [](Scenario& s, WaveInput&, const std::string& v) { s.perturbation.amplitude = to_double(v); }},
      {"perturbation.center", [](Scenario& s, WaveInput&, const std::string& v) { s.perturbation.center = to_double(v); }},
      {"perturbation.width", [](Scenario& s, WaveInput&, const std::string& v) { s.perturbation.width = positive(v); }},
      {"perturbation.seed",
       [](Scenario& s, WaveInput&, const std::string& v) {
         const long long x = to_integer(v);
         if (x < 0) throw ConfigError("seed must be nonnegative");
         s.perturbation.seed = static_cast<std::uint64_t>(x);
       }},
      {"perturbation.charge_amplitude",
       [](Scenario& s, WaveInput&, const std::string& v) { s.perturbation.charge_amplitude = to_double(v); }},

      {"time.t_end", [](Scenario& s, WaveInput&, const std::string& v) { s.t_end = positive(v); }},
      {"time.cfl",
       [](Scenario& s, WaveInput&, const std::string& v) {
         s.cfl = positive(v);
         if (s.cfl > 1.0) throw ConfigError("cfl must not exceed 1, got " + v);
       }},
      {"time.reconstruction",
       [](Scenario& s, WaveInput&, const std::string& v) { s.reconstruction = choice(v, kReconstruction); }},

      {"output.interval", [](Scenario& s, WaveInput&, const std::string& v) { s.output_interval = nonnegative(v); }},

      {"diagnostics.k", [](Scenario& s, WaveInput&, const std::string& v) { s.energy_k = int_at_least(v, 0); }},
      {"diagnostics.derivative_order",
       [](Scenario& s, WaveInput&, const std::string& v) {
         s.derivative_order = int_at_least(v, 0);
         if (s.derivative_order > 2) throw ConfigError("derivative_order must be 0, 1 or 2, got " + v);
       }},

      {"run.work_budget", [](Scenario& s, WaveInput&, const std::string& v) { s.work_budget = positive(v); }},
  };
  return table;
}

std::string located(const std::string& source, int line, const std::string& message) {
  std::ostringstream os;
  os << source << ':' << line << ": " << message;
  return os.str();
}

json state_json(const waves::EulerState& s) { return {{"rho", s.rho}, {"u1", s.u1}, {"theta", s.theta}}; }

std::string hex64(std::uint64_t h) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  return out;
}

}  // namespace

// --- scenario ----------------------------------------------------------------------

Scenario parse_scenario_text(const std::string& text, const std::string& source) {
  Scenario sc;
  WaveInput wave;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  std::map<std::string, int> seen;
  int line_no = 0;
  const auto& table = setters();
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(located(source, line_no, "malformed section header '" + line + "'"));
      section = trim(line.substr(1, line.size() - 2));
      bool known = false;
      for (const auto& [key, _] : table)
        if (key.compare(0, section.size() + 1, section + ".") == 0) known = true;
      if (!known) throw ConfigError(located(source, line_no, "unknown section [" + section + "]"));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(located(source, line_no, "expected key = value, got '" + line + "'"));
    if (section.empty()) throw ConfigError(located(source, line_no, "key outside of a [section]"));
    const std::string key = section + "." + trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = table.find(key);
    if (it == table.end()) throw ConfigError(located(source, line_no, "unknown key '" + key + "'"));
    if (seen.count(key)) {
      throw ConfigError(located(source, line_no, "duplicate key '" + key + "' (first on line " +
                                                     std::to_string(seen[key]) + ")"));
    }
    seen[key] = line_no;
    try {
      it->second(sc, wave, value);
    } catch (const ConfigError& e) {
      throw ConfigError(located(source, line_no, key + ": " + e.what()));
    }
    if (key == "wave.w_minus") wave.w_line = line_no;
    if (key == "wave.rho_minus" || key == "wave.u_minus" || key == "wave.theta_minus") wave.minus_line = line_no;
  }

  const bool any_minus = wave.rho_minus || wave.u_minus || wave.theta_minus;
  if (any_minus && wave.w_minus) {
    throw ConfigError(located(source, wave.w_line, "give either wave.w_minus or the minus state, not both"));
  }
  if (any_minus) {
    if (!(wave.rho_minus && wave.u_minus && wave.theta_minus)) {
      throw ConfigError(located(source, wave.minus_line, "the minus state needs rho_minus, u_minus and theta_minus"));
    }
    sc.minus = waves::EulerState{*wave.rho_minus, *wave.u_minus, *wave.theta_minus};
    try {
      sc.end_states();
    } catch (const ConfigError& e) {
      throw ConfigError(located(source, wave.minus_line, e.what()));
    }
  }
  if (wave.w_minus) {
    try {
      sc.minus = waves::build_3_rarefaction(sc.plus, *wave.w_minus).minus;
    } catch (const std::exception& e) {
      throw ConfigError(located(source, wave.w_line, std::string("wave.w_minus: ") + e.what()));
    }
  }
  try {
    sc.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return sc;
}

Scenario parse_scenario(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario_text(ss.str(), path.string());
}

json scenario_to_json(const Scenario& s) {
  json j;
  j["mesh"] = {{"geometry", name_of(s.mesh.geometry, kGeometries)},
               {"x_min", s.mesh.x_min},
               {"x_max", s.mesh.x_max},
               {"nx", s.mesh.nx},
               {"y_min", s.mesh.y_min},
               {"y_max", s.mesh.y_max},
               {"ny", s.mesh.ny}};
  j["grid"] = {{"half_width", s.v_half_width},
               {"points", s.v_points},
               {"center_v1", s.v_center[0]},
               {"center_v2", s.v_center[1]},
               {"center_v3", s.v_center[2]}};
  j["kernel"] = {{"gamma", s.kernel.gamma},     {"s", s.kernel.s},         {"theta_min", s.kernel.theta_min},
                 {"n_theta", s.kernel.n_theta}, {"n_phi", s.kernel.n_phi}, {"work_budget", s.kernel.work_budget}};
  j["collision"] = {{"mode", name_of(s.collision, kCollisions)},
                    {"viscosity", s.viscosity},
                    {"viscosity_exponent", s.viscosity_exponent}};
  j["species"] = {{"mode", name_of(s.species, kSpecies)}, {"x_boundary", name_of(s.x_boundary, kXBoundary)}};
  const auto ends = s.end_states();
  j["wave"] = {{"plus", state_json(ends.plus)},
               {"minus", state_json(ends.minus)},
               {"strength", waves::wave_strength(ends)}};
  j["perturbation"] = {{"kind", name_of(s.perturbation.kind, kPerturbations)},
                       {"amplitude", s.perturbation.amplitude},
                       {"center", s.perturbation.center},
                       {"width", s.perturbation.width},
                       {"seed", s.perturbation.seed},
                       {"charge_amplitude", s.perturbation.charge_amplitude}};
  j["time"] = {{"t_end", s.t_end}, {"cfl", s.cfl}, {"reconstruction", name_of(s.reconstruction, kReconstruction)}};
  j["output"] = {{"interval", s.output_interval}};
  j["diagnostics"] = {{"k", s.energy_k}, {"derivative_order", s.derivative_order}};
  j["run"] = {{"work_budget", s.work_budget}};
  return j;
}

std::string json_hash(const json& doc) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : doc.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return hex64(h);
}

// --- manifest ----------------------------------------------------------------------

std::string tool_version() { return KWAVE_VERSION; }

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

std::string RunManifest::hash() const {
  return json_hash(json{{"command", command}, {"parameters", parameters}, {"seed", seed}, {"version", version}});
}

json RunManifest::to_json() const {
  return {{"hash", hash()},
          {"command", command},
          {"parameters", parameters},
          {"seed", seed},
          {"version", version},
          {"wall_clock_seconds", wall_clock_seconds},
          {"started_utc", started_utc},
          {"threads", threads},
          {"outputs", outputs}};
}

void RunManifest::write(const fs::path& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write manifest " + path.string());
  out << to_json().dump(2) << '\n';
}

void write_manifest_line(std::ostream& os, const std::string& hash) { os << "# manifest: " << hash << '\n'; }

std::string read_manifest_line(const fs::path& csv) {
  std::ifstream in(csv);
  std::string line;
  if (!std::getline(in, line)) return {};
  const std::string prefix = "# manifest: ";
  if (line.compare(0, prefix.size(), prefix) != 0) return {};
  return trim(line.substr(prefix.size()));
}

// --- CSV ----------------------------------------------------------------------------

void write_snapshot_csv(std::ostream& os, const solver::Solver& solver, const solver::SolutionSnapshot& s,
                        const std::string& hash) {
  const auto& m = solver.mesh();
  const bool duct = m.geometry == Geometry::duct;
  write_manifest_line(os, hash);
  os << (duct ? "x,y,rho,u1,u2,theta,phi\n" : "x,rho,u1,u2,theta,phi\n");
  const auto flags = os.flags();
  const auto prec = os.precision();
  os << std::setprecision(17);
  for (int i = 0; i < m.nx; ++i)
    for (int j = 0; j < m.ny; ++j) {
      const std::size_t c = m.index(i, j);
      const auto& st = s.macro[c];
      os << m.x(i) << ',';
      if (duct) os << m.y(j) << ',';
      os << st.rho << ',' << st.u[0] << ',' << st.u[1] << ',' << st.theta << ',' << (s.field ? s.field->phi[c] : 0.0)
         << '\n';
    }
  os.flags(flags);
  os.precision(prec);
}

std::vector<double> DiagnosticsTable::column(const std::string& name) const {
  for (std::size_t c = 0; c < columns.size(); ++c)
    if (columns[c] == name) {
      std::vector<double> out;
      out.reserve(rows.size());
      for (const auto& r : rows) out.push_back(r.at(c));
      return out;
    }
  throw ConfigError("diagnostics CSV has no column '" + name + "'");
}

DiagnosticsTable read_diagnostics_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  DiagnosticsTable t;
  t.manifest_hash = read_manifest_line(path);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    if (t.columns.empty()) {
      t.columns = split_csv(line);
      continue;
    }
    const auto cells = split_csv(line);
    if (cells.size() != t.columns.size()) {
      throw ConfigError(located(path.string(), line_no, "expected " + std::to_string(t.columns.size()) + " columns"));
    }
    std::vector<double> row;
    for (const auto& c : cells) {
      try {
        row.push_back(to_double(c));
      } catch (const ConfigError& e) {
        throw ConfigError(located(path.string(), line_no, e.what()));
      }
    }
    t.rows.push_back(std::move(row));
  }
  if (t.columns.empty()) throw ConfigError(path.string() + ": no header row");
  return t;
}

std::vector<ReportEntry> build_report(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ConfigError("report: " + dir.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().filename() == "diagnostics.csv") files.push_back(e.path());
  if (files.empty()) throw ConfigError("report: no diagnostics.csv files under " + dir.string() + " (empty input)");
  std::sort(files.begin(), files.end());

  std::vector<ReportEntry> out;
  for (const auto& f : files) {
    const DiagnosticsTable t = read_diagnostics_csv(f);
    ReportEntry e;
    e.file = f;
    e.manifest_hash = t.manifest_hash;
    e.rows = t.rows.size();
    const fs::path manifest = f.parent_path() / "manifest.json";
    if (fs::exists(manifest)) {
      std::ifstream in(manifest);
      const json j = json::parse(in, nullptr, false);
      e.manifest_verified = !j.is_discarded() && j.contains("hash") && j["hash"] == t.manifest_hash;
    }
    if (!t.rows.empty()) {
      const auto time = t.column("t");
      e.t_final = time.back();
      for (const char* name : {"conv_metric", "Ek", "Dk", "eta_int", "grad_phi"}) {
        const auto y = t.column(name);
        e.slopes[name] = diagnostics::tail_slope(time, y);
        e.final_values[name] = y.back();
      }
    }
    out.push_back(std::move(e));
  }
  return out;
}

void write_report_csv(std::ostream& os, const std::vector<ReportEntry>& entries) {
  os << "file,manifest,verified,rows,t_final,slope_conv_metric,slope_Ek,slope_Dk,slope_eta_int,slope_grad_phi,"
        "final_conv_metric,final_Ek\n";
  const auto flags = os.flags();
  const auto prec = os.precision();
  os << std::setprecision(17);
  auto get = [](const std::map<std::string, double>& m, const char* k) {
    const auto it = m.find(k);
    return it == m.end() ? std::nan("") : it->second;
  };
  for (const auto& e : entries) {
    os << e.file.string() << ',' << e.manifest_hash << ',' << (e.manifest_verified ? "yes" : "no") << ',' << e.rows
       << ',' << e.t_final << ',' << get(e.slopes, "conv_metric") << ',' << get(e.slopes, "Ek") << ','
       << get(e.slopes, "Dk") << ',' << get(e.slopes, "eta_int") << ',' << get(e.slopes, "grad_phi") << ','
       << get(e.final_values, "conv_metric") << ',' << get(e.final_values, "Ek") << '\n';
  }
  os.flags(flags);
  os.precision(prec);
}

}  // namespace kwave::io
