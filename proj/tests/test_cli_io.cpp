#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "kwave/cli_io.hpp"

using namespace kwave;
using namespace kwave::io;
namespace fs = std::filesystem;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_scenario_text(text, "case.ini");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

bool contains(const std::string& s, const std::string& fragment) { return s.find(fragment) != std::string::npos; }

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("kwave_test_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

const char* kSmall = R"(# small run
[mesh]
x_min = -6
x_max = 6
nx = 16

[grid]
points = 8
half_width = 5

[wave]
strength = 0.2

[perturbation]
kind = random
amplitude = 1e-3
seed = 7

[time]
t_end = 0.5

[output]
interval = 0.25
)";

}  // namespace

TEST_CASE("a minimal file fills in the defaults") {
  const Scenario s = parse_scenario_text("[time]\nt_end = 2\n");
  const Scenario d;
  CHECK(s.t_end == 2.0);
  CHECK(s.mesh.nx == d.mesh.nx);
  CHECK(s.v_points == d.v_points);
  CHECK(s.cfl == d.cfl);
  CHECK(s.collision == d.collision);
  CHECK(s.reconstruction == d.reconstruction);
  CHECK_FALSE(s.minus.has_value());

  const Scenario full = parse_scenario_text(kSmall);
  CHECK(full.mesh.nx == 16);
  CHECK(full.perturbation.kind == solver::PerturbationKind::random);
  CHECK(full.perturbation.seed == 7);
  CHECK(full.output_interval == 0.25);
}

TEST_CASE("parse errors carry the source, line and key") {
  CHECK(contains(error_of("[mesh]\nnx = 1O\n"), "case.ini:2: mesh.nx"));
  CHECK(contains(error_of("[mesh]\nbogus = 1\n"), "case.ini:2"));
  CHECK(contains(error_of("[nowhere]\n"), "case.ini:1"));
  CHECK(contains(error_of("nx = 4\n"), "case.ini:1"));
  CHECK(contains(error_of("[mesh]\nnx = 4\nnx = 5\n"), "case.ini:3"));
  CHECK(contains(error_of("[time]\ncfl = 1.5\n"), "cfl"));
  CHECK(contains(error_of("[collision]\nmode = maybe\n"), "mode"));
  CHECK(contains(error_of("[wave]\nrho_minus = 1\n"), "case.ini"));
  CHECK(contains(error_of("[wave]\nw_minus = 0.5\nrho_minus = 1\nu_minus = 0\ntheta_minus = 1\n"), "w_minus"));
}

TEST_CASE("cross-field errors: lambda3 ordering and duct symmetry") {
  // w_minus at or above lambda3 of the plus state would need a shock
  const std::string wave = error_of("[wave]\nrho_plus = 1\nu_plus = 0\ntheta_plus = 1.5\nw_minus = 2\n");
  CHECK(contains(wave, "lambda3"));
  const std::string duct = error_of("[mesh]\ngeometry = duct\nny = 4\n[grid]\ncenter_v2 = 0.25\n");
  CHECK(contains(duct, "center_v2"));
  CHECK(contains(error_of("[time]\ncfl = 0.8\nreconstruction = minmod\n"), "minmod"));
}

TEST_CASE("w_minus builds the minus state on the 3-curve") {
  const Scenario s = parse_scenario_text("[wave]\nrho_plus = 1\nu_plus = 0\ntheta_plus = 1.5\nw_minus = 1.2\n");
  REQUIRE(s.minus.has_value());
  CHECK(waves::lambda3(*s.minus) == doctest::Approx(1.2).epsilon(1e-10));
  const auto inv = waves::riemann_invariants_3(s.plus);
  const auto inv_minus = waves::riemann_invariants_3(*s.minus);
  CHECK(inv_minus.r1 == doctest::Approx(inv.r1).epsilon(1e-10));
  CHECK(inv_minus.s == doctest::Approx(inv.s).epsilon(1e-10));
}

TEST_CASE("scenario hash is stable and sensitive to every input") {
  const Scenario s = parse_scenario_text(kSmall);
  const auto j = scenario_to_json(s);
  CHECK(json_hash(j) == json_hash(scenario_to_json(parse_scenario_text(kSmall))));
  CHECK(json_hash(j).size() == 16);
  Scenario t = s;
  t.mesh.nx += 1;
  CHECK(json_hash(scenario_to_json(t)) != json_hash(j));
  t = s;
  t.perturbation.seed = 8;
  CHECK(json_hash(scenario_to_json(t)) != json_hash(j));

  RunManifest m;
  m.command = "run";
  m.parameters = j;
  m.seed = 7;
  m.version = "1.0.0";
  RunManifest later = m;
  later.wall_clock_seconds = 12.0;
  later.started_utc = "2000-01-01T00:00:00Z";
  CHECK(m.hash() == later.hash());
  later.seed = 8;
  CHECK(m.hash() != later.hash());
  const auto doc = m.to_json();
  CHECK(doc["hash"] == m.hash());
  CHECK(doc["command"] == "run");
  // the echoed scenario parses back to the same hash
  CHECK(json_hash(doc["parameters"]) == json_hash(j));
}

TEST_CASE("report refuses an empty directory") {
  TempDir dir("empty");
  try {
    build_report(dir.path);
    FAIL("accepted an empty directory");
  } catch (const ConfigError& e) {
    CHECK(contains(e.what(), "empty input"));
  }
  CHECK_THROWS_AS(build_report(dir.path / "missing"), ConfigError);
}

TEST_CASE("run outputs round-trip through the report with a verified manifest") {
  TempDir dir("roundtrip");
  const Scenario sc = parse_scenario_text(kSmall);
  auto write_run = [&](const fs::path& out) {
    fs::create_directories(out);
    const solver::Solver solver(sc);
    diagnostics::Monitor monitor(solver);
    RunManifest manifest;
    manifest.command = "run";
    manifest.parameters = scenario_to_json(sc);
    manifest.seed = sc.perturbation.seed;
    manifest.version = tool_version();
    const auto final_state = solver.run([&](const auto& cur, const auto* nb) { monitor.observe(cur, nb); });
    {
      std::ofstream os(out / "diagnostics.csv");
      write_manifest_line(os, manifest.hash());
      os << diagnostics::diagnostics_header() << '\n';
      for (const auto& row : monitor.rows()) diagnostics::write_diagnostics_row(os, row);
    }
    {
      std::ofstream os(out / "snapshot.csv");
      write_snapshot_csv(os, solver, final_state, manifest.hash());
    }
    manifest.write(out / "manifest.json");
    return manifest.hash();
  };
  const std::string hash = write_run(dir.path / "a");
  write_run(dir.path / "b");

  CHECK(read_manifest_line(dir.path / "a" / "diagnostics.csv") == hash);
  auto body = [](const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  CHECK(body(dir.path / "a" / "diagnostics.csv") == body(dir.path / "b" / "diagnostics.csv"));
  CHECK(body(dir.path / "a" / "snapshot.csv") == body(dir.path / "b" / "snapshot.csv"));

  // snapshots: header after the manifest line, 17 significant digits
  std::ifstream snap(dir.path / "a" / "snapshot.csv");
  std::string line;
  std::getline(snap, line);
  CHECK(line == "# manifest: " + hash);
  std::getline(snap, line);
  CHECK(line == "x,rho,u1,u2,theta,phi");
  std::getline(snap, line);
  CHECK(line.substr(0, line.find(',')) == "-5.625");
  const std::string rho = line.substr(line.find(',') + 1, line.find(',', line.find(',') + 1) - line.find(',') - 1);
  CHECK(rho.find_first_of("eE") == std::string::npos);
  CHECK(rho.size() >= 17);

  const auto table = read_diagnostics_csv(dir.path / "a" / "diagnostics.csv");
  CHECK(table.manifest_hash == hash);
  CHECK(table.rows.size() == 3);

  const auto report = build_report(dir.path);
  REQUIRE(report.size() == 2);
  for (const auto& e : report) {
    CHECK(e.manifest_verified);
    CHECK(e.rows == 3);
    CHECK(e.t_final == doctest::Approx(0.5));
    CHECK(e.slopes.count("conv_metric") == 1);
  }
  std::ostringstream os;
  write_report_csv(os, report);
  CHECK(contains(os.str(), "slope_conv_metric"));

  // a tampered manifest no longer verifies
  std::ofstream(dir.path / "b" / "manifest.json") << R"({"hash": "0000000000000000"})";
  const auto tampered = build_report(dir.path);
  CHECK(tampered[0].manifest_verified);
  CHECK_FALSE(tampered[1].manifest_verified);
}
