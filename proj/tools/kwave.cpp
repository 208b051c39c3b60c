// kwave: command-line front end.
//
//   kwave wave        rarefaction profile and Burgers decay slopes
//   kwave collision   conservation, null-space and Burnett checks of the quadrature
//   kwave field-test  Poisson manufactured-solution error table
//   kwave run         kinetic solver on a scenario file
//   kwave report      tail slopes of every diagnostics CSV below a directory
//
// Exit codes: 0 success, 2 configuration error, 3 numerical abort.
// KWAVE_THREADS sets the OpenMP thread count.

#include <CLI11.hpp>
#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <memory>
#include <sstream>

#include "kwave/cli_io.hpp"
#include "kwave/collision.hpp"
#include "kwave/diagnostics.hpp"
#include "kwave/euler_waves.hpp"
#include "kwave/field.hpp"
#include "kwave/solver.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace kwave;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

int configure_threads() {
  const char* env = std::getenv("KWAVE_THREADS");
  if (env == nullptr || *env == '\0') return omp_get_max_threads();
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 1 || n > 4096) throw ConfigError(std::string("KWAVE_THREADS must be a positive integer, got '") + env + "'");
  omp_set_num_threads(static_cast<int>(n));
  return static_cast<int>(n);
}

double parse_q(const std::string& s) {
  if (s == "inf" || s == "infinity") return std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  double q = 0.0;
  try {
    q = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || !(q >= 1.0)) throw ConfigError("q must be a number >= 1 or 'inf', got '" + s + "'");
  return q;
}

std::string q_label(double q) {
  if (std::isinf(q)) return "inf";
  std::ostringstream os;
  os << q;
  return os.str();
}

std::ofstream open_csv(const fs::path& path, const std::string& hash) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  io::write_manifest_line(out, hash);
  out << std::setprecision(17);
  return out;
}

void prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw ConfigError("cannot create output directory " + dir.string());
}

io::RunManifest start_manifest(const std::string& command, json parameters, int threads) {
  io::RunManifest m;
  m.command = command;
  m.parameters = std::move(parameters);
  m.version = io::tool_version();
  m.started_utc = io::utc_now();
  m.threads = threads;
  return m;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// --- wave ------------------------------------------------------------------------------

struct WaveOptions {
  // lambda3(plus) = 1 and w_minus = 0: the Burgers pair (0, 1).
  double rho_plus = 1.0, u_plus = 0.0, theta_plus = 0.9;
  double w_minus = 0.0;
  std::optional<double> strength;
  std::vector<double> times{0.0, 10.0, 100.0};
  double x_min = -60.0, x_max = 160.0;
  int nx = 441;
  std::vector<std::string> qs{"1", "2", "inf"};
  double t_first = 10.0, t_last = 1000.0;
  int n_times = 25;
  fs::path out = ".";
};

int run_wave(const WaveOptions& o, int threads) {
  const auto start = std::chrono::steady_clock::now();
  const waves::EulerState plus{o.rho_plus, o.u_plus, o.theta_plus};
  const waves::EndStates ends =
      o.strength ? waves::build_3_rarefaction_with_strength(plus, *o.strength) : waves::build_3_rarefaction(plus, o.w_minus);
  waves::check_rarefaction_connected(ends);
  if (!(o.x_max > o.x_min) || o.nx < 2) throw ConfigError("wave: need x_max > x_min and nx >= 2");
  if (!(o.t_first > 0.0) || !(o.t_last > o.t_first) || o.n_times < 2) {
    throw ConfigError("wave: need 0 < t_first < t_last and at least 2 decay times");
  }
  std::vector<double> qs;
  for (const auto& s : o.qs) qs.push_back(parse_q(s));

  const auto profile = waves::WaveProfile::smoothed(ends);
  std::vector<double> decay_times(o.n_times);
  for (int n = 0; n < o.n_times; ++n)
    decay_times[n] = o.t_first * std::pow(o.t_last / o.t_first, static_cast<double>(n) / (o.n_times - 1));

  prepare_dir(o.out);
  json params = {{"plus", {{"rho", plus.rho}, {"u1", plus.u1}, {"theta", plus.theta}}},
                 {"minus", {{"rho", ends.minus.rho}, {"u1", ends.minus.u1}, {"theta", ends.minus.theta}}},
                 {"times", o.times},
                 {"x_min", o.x_min},
                 {"x_max", o.x_max},
                 {"nx", o.nx},
                 {"q", o.qs},
                 {"decay_times", decay_times}};
  auto manifest = start_manifest("wave", params, threads);
  const std::string hash = manifest.hash();

  {
    auto csv = open_csv(o.out / "wave_profile.csv", hash);
    csv << "t,x1,rho,u1,theta,lambda3,R1,S\n";
    for (double t : o.times) {
      if (t < 0.0) throw ConfigError("wave: times must be nonnegative");
      for (int i = 0; i < o.nx; ++i) {
        const double x = o.x_min + (o.x_max - o.x_min) * i / (o.nx - 1);
        const auto st = profile(t, x);
        const auto inv = waves::riemann_invariants_3(st);
        csv << t << ',' << x << ',' << st.rho << ',' << st.u1 << ',' << st.theta << ',' << waves::lambda3(st) << ','
            << inv.r1 << ',' << inv.s << '\n';
      }
    }
  }

  struct Quantity {
    const char* name;
    waves::DecayQuantity kind;
  };
  const Quantity quantities[] = {{"burgers_gradient", waves::DecayQuantity::burgers_gradient},
                                 {"burgers_second", waves::DecayQuantity::burgers_second},
                                 {"burgers_distance", waves::DecayQuantity::burgers_distance},
                                 {"profile_gradient", waves::DecayQuantity::profile_gradient},
                                 {"profile_distance", waves::DecayQuantity::profile_distance}};
  auto expected = [](waves::DecayQuantity k, double q) {
    const double inv_q = std::isinf(q) ? 0.0 : 1.0 / q;
    switch (k) {
      case waves::DecayQuantity::burgers_gradient:
      case waves::DecayQuantity::profile_gradient: return -1.0 + inv_q;
      case waves::DecayQuantity::burgers_second: return -1.0;
      default: return q > 1.0 ? -0.5 + 0.5 * inv_q : std::nan("");
    }
  };

  auto csv = open_csv(o.out / "wave_decay.csv", hash);
  csv << "quantity,t,q,norm,fitted_slope\n";
  std::cout << std::left << std::setw(18) << "quantity" << std::setw(6) << "q" << std::setw(12) << "slope"
            << "bound\n";
  for (const auto& quantity : quantities) {
    const auto table = waves::decay_report(profile, decay_times, qs, quantity.kind);
    for (const auto& row : table.rows)
      csv << quantity.name << ',' << row.t << ',' << q_label(row.q) << ',' << row.norm << ','
          << table.slope_for(row.q) << '\n';
    for (const auto& [q, slope] : table.slopes) {
      std::cout << std::setw(18) << quantity.name << std::setw(6) << q_label(q) << std::setw(12) << std::fixed
                << std::setprecision(4) << slope << expected(quantity.kind, q) << '\n';
      std::cout.unsetf(std::ios::fixed);
    }
  }

  manifest.outputs = {"wave_profile.csv", "wave_decay.csv"};
  manifest.wall_clock_seconds = seconds_since(start);
  manifest.write(o.out / "manifest.json");
  return 0;
}

// --- collision -----------------------------------------------------------------------

struct CollisionOptions {
  collision::KernelConfig kernel;
  double half_width = 5.0;
  int points = 16;
  double rho = 1.0, u1 = 0.0, theta = 1.5;
  bool burnett = false;
  std::vector<double> burnett_thetas{1.5, 2.0, 2.5};
  fs::path out = ".";
};

double l1_norm(std::span<const double> f, const velocity::VelocityGrid& grid) {
  double s = 0.0;
  for (double x : f) s += std::abs(x);
  return s * grid.weight();
}

int run_collision(const CollisionOptions& o, int threads) {
  const auto start = std::chrono::steady_clock::now();
  o.kernel.validate();
  if (o.points < 4 || !(o.half_width > 0.0)) throw ConfigError("collision: need points >= 4 and half_width > 0");
  if (!(o.rho > 0.0) || !(o.theta > 0.0)) throw ConfigError("collision: rho and theta must be positive");
  const velocity::VelocityGrid grid(o.half_width, o.points);
  collision::check_work_budget(grid, o.kernel);
  const velocity::MacroState state{o.rho, {o.u1, 0.0, 0.0}, o.theta};

  prepare_dir(o.out);
  json params = {{"kernel",
                  {{"gamma", o.kernel.gamma},
                   {"s", o.kernel.s},
                   {"theta_min", o.kernel.theta_min},
                   {"n_theta", o.kernel.n_theta},
                   {"n_phi", o.kernel.n_phi}}},
                 {"grid", {{"half_width", o.half_width}, {"points", o.points}}},
                 {"state", {{"rho", o.rho}, {"u1", o.u1}, {"theta", o.theta}}},
                 {"burnett", o.burnett},
                 {"burnett_thetas", o.burnett_thetas}};
  auto manifest = start_manifest("collision", params, threads);
  const std::string hash = manifest.hash();
  auto csv = open_csv(o.out / "collision_checks.csv", hash);
  csv << "check,component,value\n";

  // Conservation on a non-equilibrium bimodal distribution.
  const auto m_left = velocity::maxwellian({0.5 * o.rho, {o.u1 - 1.0, 0.0, 0.0}, o.theta}, grid);
  const auto m_right = velocity::maxwellian({0.5 * o.rho, {o.u1 + 1.0, 0.3, 0.0}, o.theta}, grid);
  std::vector<double> bimodal(grid.size());
  for (std::size_t n = 0; n < grid.size(); ++n) bimodal[n] = m_left[n] + m_right[n];
  const auto q_ff = collision::collision_Q(bimodal, bimodal, grid, o.kernel);
  const auto moments = velocity::invariant_moments(q_ff, grid);
  const double q_l1 = l1_norm(q_ff, grid);
  double worst = 0.0;
  for (int i = 0; i < 5; ++i) {
    csv << "conservation," << i << ',' << std::abs(moments[i]) / q_l1 << '\n';
    worst = std::max(worst, std::abs(moments[i]) / q_l1);
  }
  std::cout << "conservation |int xi Q(F,F)| / |Q|_1   " << worst << '\n';

  // Q(M, M) relative to its gain half.
  const auto m = velocity::maxwellian(state, grid);
  const auto parts = collision::collision_Q_parts(m, m, grid, o.kernel);
  const auto q_mm = parts.total();
  const double q_mm_rel = l1_norm(q_mm, grid) / l1_norm(parts.gain, grid);
  csv << "Q(M;M)_relative,," << q_mm_rel << '\n';
  std::cout << "|Q(M,M)|_1 / |gain|_1                  " << q_mm_rel << '\n';

  // Null space of L_M: the five collision-invariant directions.
  const collision::LinearizedOperator op(state, grid, o.kernel, o.points <= collision::LinearizedOperator::kDenseLimit);
  const double op_norm = op.norm_estimate();
  const velocity::ChiBasis basis(state, grid);
  double worst_null = 0.0;
  for (int i = 0; i < 5; ++i) {
    const auto& chi = basis.chi(i);
    const auto l_chi = op.apply(chi);
    double num = 0.0, den = 0.0;
    for (std::size_t n = 0; n < grid.size(); ++n) {
      num = std::max(num, std::abs(l_chi[n]));
      den = std::max(den, std::abs(chi[n]));
    }
    const double rel = num / (op_norm * den);
    worst_null = std::max(worst_null, rel);
    csv << "null_space," << i << ',' << rel << '\n';
  }
  std::cout << "|L_M chi_i|_inf / (|L_M| |chi_i|_inf)   " << worst_null << '\n';
  manifest.outputs = {"collision_checks.csv"};

  if (o.burnett) {
    auto burnett = open_csv(o.out / "burnett.csv", hash);
    burnett << "theta,i,j,k,l,bb\n";
    auto transport = open_csv(o.out / "transport.csv", hash);
    transport << "theta,viscosity,conductivity,worst_residual\n";
    for (double theta : o.burnett_thetas) {
      if (!(theta > 0.0)) throw ConfigError("collision: Burnett temperatures must be positive");
      const auto set = collision::burnett_build(velocity::MacroState{o.rho, {o.u1, 0.0, 0.0}, theta}, grid, o.kernel);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          for (int k = 0; k < 3; ++k)
            for (int l = 0; l < 3; ++l)
              burnett << theta << ',' << i + 1 << ',' << j + 1 << ',' << k + 1 << ',' << l + 1 << ','
                      << set.bb[i][j][k][l] << '\n';
      const auto tc = collision::transport_coeffs(set);
      transport << theta << ',' << tc.viscosity << ',' << tc.conductivity << ',' << set.worst_residual << '\n';
      std::cout << "theta " << theta << "  viscosity " << tc.viscosity << "  conductivity " << tc.conductivity
                << '\n';
    }
    manifest.outputs.push_back("burnett.csv");
    manifest.outputs.push_back("transport.csv");
  }

  manifest.wall_clock_seconds = seconds_since(start);
  manifest.write(o.out / "manifest.json");
  return 0;
}

// --- field-test ----------------------------------------------------------------------

struct FieldOptions {
  std::vector<int> cells{16, 32, 64, 128, 256};
  double half_length = 1.0;
  fs::path out = ".";
};

int run_field_test(const FieldOptions& o, int threads) {
  const auto start = std::chrono::steady_clock::now();
  if (o.cells.empty()) throw ConfigError("field-test: no cell counts given");
  if (!(o.half_length > 0.0)) throw ConfigError("field-test: half_length must be positive");
  prepare_dir(o.out);
  auto manifest = start_manifest("field-test", {{"cells", o.cells}, {"half_length", o.half_length}}, threads);
  auto csv = open_csv(o.out / "field_test.csv", manifest.hash());
  csv << "cells,h,l2_error,observed_order\n";
  std::cout << std::left << std::setw(8) << "cells" << std::setw(14) << "h" << std::setw(14) << "l2_error"
            << "order\n";
  std::optional<field::ManufacturedError> previous;
  for (int n : o.cells) {
    if (n < 4) throw ConfigError("field-test: cell counts must be >= 4");
    const auto e = field::poisson_manufactured(n, o.half_length);
    const double order = previous ? std::log(previous->l2_error / e.l2_error) / std::log(previous->h / e.h) : std::nan("");
    csv << e.cells << ',' << e.h << ',' << e.l2_error << ',' << order << '\n';
    std::cout << std::setw(8) << e.cells << std::setw(14) << e.h << std::setw(14) << e.l2_error << order << '\n';
    previous = e;
  }
  manifest.outputs = {"field_test.csv"};
  manifest.wall_clock_seconds = seconds_since(start);
  manifest.write(o.out / "manifest.json");
  return 0;
}

// --- run -----------------------------------------------------------------------------

struct RunOptions {
  fs::path scenario;
  fs::path out = "run_out";
  bool snapshots = true;
  bool progress = false;
};

int run_solver(const RunOptions& o, int threads) {
  const auto start = std::chrono::steady_clock::now();
  const auto scenario = io::parse_scenario(o.scenario);
  prepare_dir(o.out);
  auto manifest = start_manifest("run", io::scenario_to_json(scenario), threads);
  manifest.seed = scenario.perturbation.seed;
  const std::string hash = manifest.hash();

  const solver::Solver solver(scenario);
  diagnostics::Monitor monitor(solver);
  int snapshot_count = 0;
  auto observer = [&](const solver::SolutionSnapshot& current, const solver::SolutionSnapshot* neighbor) {
    monitor.observe(current, neighbor);
    if (o.snapshots) {
      std::ostringstream name;
      name << "snapshot_" << std::setw(5) << std::setfill('0') << snapshot_count++ << ".csv";
      std::ofstream out(o.out / name.str());
      if (!out) throw ConfigError("cannot write " + (o.out / name.str()).string());
      io::write_snapshot_csv(out, solver, current, hash);
      manifest.outputs.push_back(name.str());
    }
    if (o.progress) {
      const auto& row = monitor.rows().back();
      std::cerr << "t = " << row.t << "  Ek = " << row.energy.Ek << "  conv_metric = " << row.conv_metric << '\n';
    }
  };

  auto write_diagnostics = [&] {
    auto csv = open_csv(o.out / "diagnostics.csv", hash);
    csv << diagnostics::diagnostics_header() << '\n';
    for (const auto& row : monitor.rows()) diagnostics::write_diagnostics_row(csv, row);
    manifest.outputs.push_back("diagnostics.csv");
  };

  int code = 0;
  try {
    solver.run(observer);
  } catch (const solver::RunAborted& e) {
    std::cerr << "kwave run: numerical abort at t = " << e.state().time << ": " << e.what() << '\n';
    std::ofstream out(o.out / "abort_state.csv");
    io::write_snapshot_csv(out, solver, e.state(), hash);
    manifest.outputs.push_back("abort_state.csv");
    code = kExitNumerical;
  }
  write_diagnostics();
  manifest.wall_clock_seconds = seconds_since(start);
  manifest.write(o.out / "manifest.json");
  if (code == 0 && !monitor.rows().empty()) {
    const auto& last = monitor.rows().back();
    std::cout << "t_end " << last.t << "  Ek " << last.energy.Ek << "  conv_metric " << last.conv_metric << "  clipped "
              << last.clipped << '\n';
  }
  return code;
}

// --- report --------------------------------------------------------------------------

int run_report(const fs::path& dir, const fs::path& out) {
  const auto entries = io::build_report(dir);
  if (out.empty() || out == "-") {
    io::write_report_csv(std::cout, entries);
  } else {
    std::ofstream file(out);
    if (!file) throw ConfigError("cannot write " + out.string());
    io::write_report_csv(file, entries);
  }
  for (const auto& e : entries)
    if (!e.manifest_verified) std::cerr << "warning: " << e.file.string() << " does not match its manifest.json\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kinetic wave-pattern laboratory"};
  app.require_subcommand(1);

  WaveOptions wave;
  auto* wave_cmd = app.add_subcommand("wave", "3-rarefaction profile and Burgers decay slopes");
  wave_cmd->add_option("--rho-plus", wave.rho_plus, "right density")->capture_default_str();
  wave_cmd->add_option("--u-plus", wave.u_plus, "right velocity")->capture_default_str();
  wave_cmd->add_option("--theta-plus", wave.theta_plus, "right temperature")->capture_default_str();
  wave_cmd->add_option("--w-minus", wave.w_minus, "left characteristic speed")->capture_default_str();
  wave_cmd->add_option("--strength", wave.strength, "wave strength delta (replaces --w-minus)");
  wave_cmd->add_option("--times", wave.times, "profile output times")->capture_default_str();
  wave_cmd->add_option("--x-min", wave.x_min)->capture_default_str();
  wave_cmd->add_option("--x-max", wave.x_max)->capture_default_str();
  wave_cmd->add_option("--nx", wave.nx, "profile samples per time")->capture_default_str();
  wave_cmd->add_option("--q", wave.qs, "Lebesgue exponents (number or inf)")->capture_default_str();
  wave_cmd->add_option("--t-first", wave.t_first, "first decay time")->capture_default_str();
  wave_cmd->add_option("--t-last", wave.t_last, "last decay time")->capture_default_str();
  wave_cmd->add_option("--n-times", wave.n_times, "log-spaced decay times")->capture_default_str();
  wave_cmd->add_option("--out", wave.out, "output directory")->capture_default_str();

  CollisionOptions coll;
  auto* coll_cmd = app.add_subcommand("collision", "collision quadrature checks, Burnett tables and transport");
  coll_cmd->add_option("--gamma", coll.kernel.gamma)->capture_default_str();
  coll_cmd->add_option("--s", coll.kernel.s)->capture_default_str();
  coll_cmd->add_option("--theta-min", coll.kernel.theta_min, "angular truncation")->capture_default_str();
  coll_cmd->add_option("--n-theta", coll.kernel.n_theta)->capture_default_str();
  coll_cmd->add_option("--n-phi", coll.kernel.n_phi)->capture_default_str();
  coll_cmd->add_option("--work-budget", coll.kernel.work_budget)->capture_default_str();
  coll_cmd->add_option("--half-width", coll.half_width, "velocity box half width")->capture_default_str();
  coll_cmd->add_option("--points", coll.points, "velocity points per axis")->capture_default_str();
  coll_cmd->add_option("--rho", coll.rho)->capture_default_str();
  coll_cmd->add_option("--u1", coll.u1)->capture_default_str();
  coll_cmd->add_option("--theta", coll.theta)->capture_default_str();
  coll_cmd->add_flag("--burnett", coll.burnett, "also build Burnett tables and transport coefficients");
  coll_cmd->add_option("--burnett-thetas", coll.burnett_thetas)->capture_default_str();
  coll_cmd->add_option("--out", coll.out, "output directory")->capture_default_str();

  FieldOptions fld;
  auto* field_cmd = app.add_subcommand("field-test", "Poisson manufactured-solution error table");
  field_cmd->add_option("--cells", fld.cells)->capture_default_str();
  field_cmd->add_option("--half-length", fld.half_length)->capture_default_str();
  field_cmd->add_option("--out", fld.out, "output directory")->capture_default_str();

  RunOptions run;
  auto* run_cmd = app.add_subcommand("run", "kinetic solver on a scenario file");
  run_cmd->add_option("scenario", run.scenario, "scenario file")->required();
  run_cmd->add_option("--out", run.out, "output directory")->capture_default_str();
  run_cmd->add_flag("!--no-snapshots", run.snapshots, "skip snapshot CSVs");
  run_cmd->add_flag("--progress", run.progress, "print diagnostics rows to stderr");

  fs::path report_dir;
  fs::path report_out;
  auto* report_cmd = app.add_subcommand("report", "tail slopes of every diagnostics.csv below a directory");
  report_cmd->add_option("dir", report_dir, "directory to scan")->required();
  report_cmd->add_option("--out", report_out, "report CSV (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    const int threads = configure_threads();
    if (*wave_cmd) return run_wave(wave, threads);
    if (*coll_cmd) return run_collision(coll, threads);
    if (*field_cmd) return run_field_test(fld, threads);
    if (*run_cmd) return run_solver(run, threads);
    if (*report_cmd) return run_report(report_dir, report_out);
  } catch (const ConfigError& e) {
    std::cerr << "kwave: configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "kwave: numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const DomainError& e) {
    std::cerr << "kwave: numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const json::exception& e) {
    std::cerr << "kwave: " << e.what() << '\n';
    return kExitConfig;
  }
  return 0;
}
