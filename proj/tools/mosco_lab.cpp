// mosco-lab <experiment> --config <file> [--seed S] [--out DIR] [--plot]
// Exit codes: 0 all gates pass, 1 some gate failed, 2 invalid config or run error.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "mosco/mosco.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Numerical laboratory for rescaled walkers, inclusion processes and their scaling limits"};
  std::string experiment, config_path, out;
  std::uint64_t seed = 0;
  bool plot = false;
  app.add_option("experiment", experiment, "Experiment name")
      ->required()
      ->check(CLI::IsMember(mosco::experiment_names()));
  app.add_option("--config", config_path, "INI config file")->required();
  auto* seed_opt = app.add_option("--seed", seed, "Master seed (overrides [run] seed)");
  auto* out_opt = app.add_option("--out", out, "Output directory (overrides [run] out)");
  app.add_flag("--plot", plot, "Write SVG log-log plots");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    auto cfg = mosco::load_config(config_path, experiment);
    if (*seed_opt) cfg.seed = seed;
    if (*out_opt) cfg.out = out;
    plot = plot || cfg.plot;
    const std::filesystem::path dir = cfg.out.value_or("results/" + experiment);

    const auto result = mosco::run_experiment(cfg);
    const auto files = mosco::write_outputs(dir, cfg, result, plot);

    for (const auto& t : result.tables) {
      if (t.rows.size() > 40) {
        std::cout << t.name << ": " << t.rows.size() << " rows (see " << (dir / (t.name + ".csv")).string() << ")\n";
        continue;
      }
      std::cout << t.name << '\n';
      mosco::write_csv(std::cout, t);
      for (const auto& [col, order] : t.fitted_orders) std::cout << "  fitted order " << col << " = " << order << '\n';
    }
    for (const auto& g : result.gates)
      std::printf("%s  %s: %.6g %s %.6g\n", g.pass ? "PASS" : "FAIL", g.name.c_str(), g.value, g.relation.c_str(),
                  g.threshold);
    std::printf("wall clock %.2f s; outputs in %s\n", result.wall_clock_s, dir.string().c_str());
    return result.all_pass() ? 0 : 1;
  } catch (const mosco::ConfigError& e) {
    std::cerr << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
