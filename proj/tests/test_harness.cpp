#include "doctest.h"
#include "shnse/harness.hpp"

#include "json.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace shnse;
namespace fs = std::filesystem;

namespace {

const char* kMinimal = R"(
[grid]
cells = 16 16
[model]
nu = 0.01
[time]
T = 0.1
)";

const char* kSmall = R"(
[grid]
cells = 16 16
[spectrum]
modes = 24
[model]
nu = 0.01
m0 = 1
[time]
dt = 1e-3
T = 0.05
sample_every = 10
[data]
initial_gamma = 1.5
forcing_band = 4
)";

ExperimentPlan small_plan() { return parse_config(kSmall); }

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("shnse_test_harness_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> csv_contents(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".csv") out[fs::relative(e.path(), dir).string()] = slurp(e.path());
  return out;
}

}  // namespace

TEST_CASE("minimal configuration takes the documented defaults") {
  const ExperimentPlan p = parse_config(kMinimal);
  CHECK(p.grid.dim == 2);
  CHECK(p.grid.cells[0] == 16);
  CHECK(p.grid.lengths[1] == 1.0);
  CHECK(p.modes == 128);
  CHECK(p.nu == 0.01);
  CHECK(p.mu == 0.0);
  CHECK(p.alpha == 2);
  CHECK(p.effective_m() == 128);
  CHECK(p.dt == 1e-3);
  CHECK(p.T == 0.1);
  CHECK(p.seeds == std::vector<std::uint64_t>{1});
  CHECK(p.thetas == std::vector<double>{1.0, 2.0});
  CHECK(p.axis == SweepAxis::None);
  CHECK(p.effective_flux() == FluxRule::Conservative);
  CHECK(p.warnings.empty());
  const auto echo = p.echo();
  CHECK(std::is_sorted(echo.begin(), echo.end()));
  CHECK(std::any_of(echo.begin(), echo.end(), [](const auto& kv) { return kv.first == "model.nu"; }));
}

TEST_CASE("configuration errors name the offending field") {
  auto message = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const PlanError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  CHECK(message("[model]\nnu = 0.01\n[time]\nT = 1\n").find("grid") != std::string::npos);
  CHECK(message("[grid]\ncells = 16 16\n[time]\nT = 1\n").find("model.nu") != std::string::npos);
  CHECK(message("[grid]\ncells = 16 16\n[model]\nnu = 0.01\nviscosity = 1\n[time]\nT = 1\n").find("viscosity") != std::string::npos);
  CHECK(message(std::string(kMinimal) + "[extras]\nx = 1\n").find("extras") != std::string::npos);
  CHECK(message("[grid]\ncells = 16 16\nthis line is broken\n").find("line 3") != std::string::npos);
  CHECK(message(std::string(kMinimal) + "[data]\nseeds = 3 3\n").find("data.seeds") != std::string::npos);
  CHECK(message("[grid]\ncells = 4 16\n[model]\nnu = 0.01\n[time]\nT = 1\n").find("grid.cells") != std::string::npos);
  CHECK(message("[grid]\ncells = 16 16 16\n[model]\nnu = 0.01\n[time]\nT = 1\n").find("grid.cells") != std::string::npos);
  CHECK(message(std::string(kMinimal) + "[sweep]\naxis = mu\n").find("sweep.values") != std::string::npos);
  CHECK(message(std::string(kSmall) + "[sweep]\naxis = m\nvalues = 8 30\n").find("sweep.values") != std::string::npos);
  CHECK(message("[grid]\ncells = 16 16\n[model]\nnu = abc\n[time]\nT = 1\n").find("model.nu") != std::string::npos);
  CHECK_THROWS_AS(load_config("/nonexistent/plan.ini"), PlanError);
}

TEST_CASE("unsorted sweep values are sorted with a warning") {
  const ExperimentPlan p = parse_config(std::string(kMinimal) + "[sweep]\naxis = mu\nvalues = [1e-2, 1e-4, 1e-3]\n");
  CHECK(p.values == std::vector<double>{1e-4, 1e-3, 1e-2});
  REQUIRE(p.warnings.size() == 1u);
  CHECK(p.warnings[0].find("sorted") != std::string::npos);
}

TEST_CASE("output directory resolution") {
  ExperimentPlan p = parse_config(kMinimal);
  p.out_dir = "from_plan";
  ::unsetenv("SHNSE_OUT_DIR");
  CHECK(resolve_out_dir(p, "") == "from_plan");
  ::setenv("SHNSE_OUT_DIR", "from_env", 1);
  CHECK(resolve_out_dir(p, "") == "from_env");
  CHECK(resolve_out_dir(p, "from_flag") == "from_flag");
  ::unsetenv("SHNSE_OUT_DIR");
  CHECK(grid_label(p.grid) == "2d_16x16_L1x1");
}

TEST_CASE("mu sweep: outputs, manifest and trends") {
  const fs::path dir = scratch("mu");
  ExperimentPlan p = parse_config(std::string(kSmall) + "[sweep]\naxis = mu\nvalues = 1e-4 1e-3\n");
  p.seeds = {2, 1};
  p.cache_dir = (dir / "cache").string();
  p.validate();
  const ResultBundle b = run_experiment(p, 2);
  REQUIRE(b.points.size() == 4u);
  CHECK_FALSE(b.partial);
  // sorted by (value, seed)
  CHECK(b.points[0].value == 1e-4);
  CHECK(b.points[0].seed == 1u);
  CHECK(b.points[1].seed == 2u);
  CHECK(b.points[3].run_id == "mu_0.001_s2");
  for (const auto& r : b.points) {
    CHECK(r.ok);
    CHECK(r.has_reference);
    CHECK(r.conv.size() == 2u);
    CHECK(r.diag.bound_ok);
    CHECK(r.conv[0].rho_T > 0.0);
  }
  REQUIRE(b.trends.size() == 2u);
  CHECK(b.trends[0].rho[0] < b.trends[0].rho[1]);
  CHECK(b.trends[0].strictly_decreasing);

  emit_outputs(b, dir.string());
  for (const char* f : {"manifest.json", "sweep_summary.csv", "long_table.csv", "runs/mu_0.0001_s1.csv",
                        "runs/mu_0.0001_s1_coeffs.csv"})
    CHECK(fs::exists(dir / f));
  const auto m = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(m["version"] == kVersion);
  CHECK(m["partial"] == false);
  CHECK(m["runs"].size() == 4u);
  CHECK(m["failed"].empty());
  const std::string label = grid_label(p.grid);
  CHECK(m["spectrum_sha256"][label] == b.spectrum_hashes.at(label));
  // the cache file exists and reloads to the same pairs
  const std::string cache = (fs::path(p.cache_dir) / ("stokes_" + label + ".bin")).string();
  CHECK(load_spectrum(cache, p.grid).hash_hex() == b.spectrum_hashes.at(label));
  fs::remove_all(dir);
}

TEST_CASE("m sweep reaches zero distance at m = n") {
  ExperimentPlan p = small_plan();
  p.mu = 1e-3;
  p.m0 = 4;
  p.ramp.schedule = RampSchedule::Plain;
  p.axis = SweepAxis::M;
  p.values = {8, 16, 24};
  p.validate();
  const ResultBundle b = run_experiment(p, 1);
  REQUIRE(b.points.size() == 3u);
  CHECK(b.points.back().conv[0].rho_T == 0.0);
  CHECK(b.trends[0].nonincreasing);
  CHECK(b.points[0].conv[0].rho_T > b.points[1].conv[0].rho_T);
}

TEST_CASE("a failing point is isolated and reported") {
  const fs::path dir = scratch("partial");
  // custom ramp fits m = 6 only; the m = 10 point cannot build its profile
  ExperimentPlan p = small_plan();
  p.mu = 1e-3;
  p.m0 = 2;
  p.m = 6;
  p.ramp.schedule = RampSchedule::Custom;
  p.ramp.custom = (Vec(4) << 0.2, 0.4, 0.6, 0.8).finished();
  p.axis = SweepAxis::M;
  p.values = {6, 10};
  p.validate();
  const ResultBundle b = run_experiment(p, 2);
  REQUIRE(b.points.size() == 2u);
  CHECK(b.points[0].ok);
  CHECK_FALSE(b.points[1].ok);
  CHECK(b.points[1].failure.find("custom") != std::string::npos);
  CHECK(b.partial);
  emit_outputs(b, dir.string());
  const auto m = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(m["partial"] == true);
  REQUIRE(m["failed"].size() == 1u);
  CHECK(m["failed"][0]["run_id"] == "m_10_s1");
  CHECK(fs::exists(dir / "runs" / "m_6_s1.csv"));
  fs::remove_all(dir);
}

TEST_CASE("grid formulation runs alongside and stays close") {
  ExperimentPlan p = small_plan();
  p.mu = 1e-5;
  p.formulation = Formulation::Both;
  p.grid_dt = 1e-4;
  p.m = 24;
  p.T = 0.02;
  p.sample_every = 10;
  p.validate();
  const ResultBundle b = run_experiment(p, 1);
  REQUIRE(b.points.size() == 1u);
  REQUIRE(b.points[0].ok);
  CHECK(b.points[0].grid_ran);
  CHECK_FALSE(b.points[0].grid_gap.empty());
  CHECK(b.points[0].grid_gap.front() <= 1e-12);
  CHECK(b.points[0].grid_gap.back() <= 0.05);
  CHECK_FALSE(b.points[0].grid_div.increased);
}

TEST_CASE("identical plans give byte-identical CSV files regardless of threads") {
  const fs::path a = scratch("rep_a"), c = scratch("rep_c");
  ExperimentPlan p = small_plan();
  p.axis = SweepAxis::Mu;
  p.values = {1e-4, 1e-3};
  p.seeds = {3, 1};
  p.validate();
  emit_outputs(run_experiment(p, 1), a.string());
  emit_outputs(run_experiment(p, 3), c.string());
  const auto ca = csv_contents(a), cc = csv_contents(c);
  CHECK(ca.size() >= 6u);
  CHECK(ca == cc);
  fs::remove_all(a);
  fs::remove_all(c);
}

TEST_CASE("unwritable output directory is a fatal error") {
  const ExperimentPlan p = small_plan();
  const ResultBundle b = run_experiment(p, 1);
  CHECK_THROWS(emit_outputs(b, "/proc/shnse_cannot_write_here"));
}
