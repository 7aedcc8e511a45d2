// chemosim: run, sweep and verify chemotaxis-consumption scenarios.
//
//   chemosim simulate <config> [--out DIR] [--cadence N] [--tau X]
//   chemosim sweep <listfile> [--out DIR]
//   chemosim verify <config>
//
// Exit codes: 0 success, 2 config error, 3 invariant violation, 4 solver failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "chemo/chemo.hpp"

namespace fs = std::filesystem;

namespace {

int report(const std::exception& e) {
  const int code = chemo::exit_code_for(e);
  std::cerr << "chemosim: " << chemo::status_for(code) << ": " << e.what() << '\n';
  return code;
}

int simulate(const std::string& config, const std::string& out, int cadence, double tau) {
  chemo::ScenarioConfig cfg = chemo::load_config(config);
  if (cadence > 0) cfg.cadence = cadence;
  if (tau > 0.0) cfg.tau = tau;
  chemo::RunOptions opt;
  opt.out_dir = out;
  const auto result = chemo::run_scenario(cfg, opt);
  const auto& s = result.summary;
  std::cout << "scenario " << s.name << ": " << s.steps << " steps, " << s.outputs << " records -> " << out << '\n';
  std::cout << "  ||u-M||_2 = " << chemo::format_sci(s.final_uMinusM_L2)
            << "  ||v||_H1 = " << chemo::format_sci(s.final_vH1)
            << "  L = " << chemo::format_sci(s.final_liapunov)
            << "  Liapunov monotone: " << (s.liapunov_monotone ? "yes" : "no") << '\n';
  if (!s.within_assumptions) std::cout << "  note: scenario lies outside the positivity hypotheses\n";
  return chemo::kExitOk;
}

int sweep(const std::string& listfile, const std::string& out) {
  const auto paths = chemo::load_sweep_list(listfile);
  std::vector<chemo::ScenarioConfig> configs;
  std::vector<std::string> sources;
  std::vector<chemo::SweepRow> failed_to_load;
  for (const auto& p : paths) {
    try {
      configs.push_back(chemo::load_config(p));
      sources.push_back(p.string());
    } catch (const chemo::ConfigError& e) {
      chemo::SweepRow row;
      row.source = p.string();
      row.exit_code = chemo::kExitConfig;
      row.status = chemo::status_for(row.exit_code);
      row.message = e.what();
      row.summary.name = p.stem().string();
      failed_to_load.push_back(row);
    }
  }
  auto rows = chemo::sweep(configs, sources);
  rows.insert(rows.end(), failed_to_load.begin(), failed_to_load.end());
  fs::create_directories(out);
  std::ofstream csv(fs::path(out) / "sweep_summary.csv");
  chemo::write_sweep_csv(csv, rows);
  int failures = 0;
  for (const auto& r : rows) {
    std::cout << r.status << "  " << r.source << '\n';
    failures += r.exit_code != chemo::kExitOk;
  }
  std::cout << rows.size() - failures << "/" << rows.size() << " scenarios completed\n";
  return chemo::kExitOk;
}

int verify(const std::string& config) {
  const auto cfg = chemo::load_config(config);
  const auto checks = chemo::verify_scenario(cfg);
  bool ok = true;
  for (const auto& c : checks) {
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << "  (worst " << chemo::format_sci(c.worst) << ")";
    if (!c.detail.empty()) std::cout << "  " << c.detail;
    std::cout << '\n';
    ok = ok && c.passed;
  }
  return ok ? chemo::kExitOk : chemo::kExitInvariant;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Chemotaxis-consumption simulator with local sensing"};
  app.require_subcommand(1);

  std::string config, out = "out", listfile;
  int cadence = 0;
  double tau = 0.0;

  auto* sim = app.add_subcommand("simulate", "Run one scenario");
  sim->add_option("config", config, "Scenario file")->required()->check(CLI::ExistingFile);
  sim->add_option("--out", out, "Output directory");
  sim->add_option("--cadence", cadence, "Steps between diagnostics records")->check(CLI::PositiveNumber);
  sim->add_option("--tau", tau, "Time step")->check(CLI::PositiveNumber);

  auto* sw = app.add_subcommand("sweep", "Run every scenario listed in a file");
  sw->add_option("listfile", listfile, "File with one scenario path per line")->required()->check(CLI::ExistingFile);
  sw->add_option("--out", out, "Output directory");

  auto* ver = app.add_subcommand("verify", "Run the property checks for a scenario");
  ver->add_option("config", config, "Scenario file")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : chemo::kExitConfig;
  }

  try {
    if (*sim) return simulate(config, out, cadence, tau);
    if (*sw) return sweep(listfile, out);
    if (*ver) return verify(config);
  } catch (const std::exception& e) {
    return report(e);
  }
  return chemo::kExitOk;
}
