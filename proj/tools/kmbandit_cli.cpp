// kmbandit: run seeded experiments, the figure presets, and instance tools.
// Exit codes: 0 success, 1 usage error, 2 runtime failure.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "kmbandit/kmbandit.hpp"

namespace fs = std::filesystem;
using namespace kmbandit;

namespace {

void write_outputs(const std::vector<RunRow>& rows, const fs::path& dir) {
  fs::create_directories(dir);
  const auto runs = runs_table(rows);
  write_text_file((dir / "runs.csv").string(), format_csv(runs));
  const auto summary = aggregate(runs);
  write_text_file((dir / "summary.csv").string(), format_csv(summary));
  std::cout << format_csv(summary);
}

void apply_jobs(std::vector<ExperimentConfig>& configs, int jobs) {
  if (jobs < 0) return;
  for (auto& c : configs) c.parallelism = static_cast<std::size_t>(jobs);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"k-of-the-best-m bandit identification experiments"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run the experiments in a JSON config file");
  std::string config_path;
  std::string run_out = ".";
  int run_jobs = -1;
  run->add_option("--config", config_path, "config file (object or array)")->required();
  run->add_option("--out", run_out, "output directory for runs.csv and summary.csv");
  run->add_option("--jobs", run_jobs, "override parallelism (0: all cores)");

  auto* pre = app.add_subcommand("preset", "run a figure protocol");
  std::string preset_name;
  std::string preset_out;
  PresetOptions preset_options;
  int preset_jobs = 0;
  bool dry_run = false;
  pre->add_option("--name", preset_name, "fig1|fig2|fig3")->required();
  pre->add_option("--scale", preset_options.scale, "multiplies the 100-run count");
  pre->add_flag("--full", preset_options.full, "fig1: include n = 100 and 200");
  pre->add_option("--seed", preset_options.base_seed, "base seed");
  pre->add_option("--jobs", preset_jobs, "parallelism (0: all cores)");
  pre->add_option("--out", preset_out, "output directory")->required();
  pre->add_flag("--dry-run", dry_run, "only write configs.json");

  auto* hard = app.add_subcommand("hardness", "gaps, H_eps and T* of a finite instance");
  std::string instance_path;
  std::size_t hard_k = 1;
  std::size_t hard_m = 1;
  double hard_eps = 0.0;
  double hard_delta = 0.001;
  hard->add_option("--instance", instance_path, "instance file")->required();
  hard->add_option("--k", hard_k)->required();
  hard->add_option("--m", hard_m)->required();
  hard->add_option("--eps", hard_eps)->required();
  hard->add_option("--delta", hard_delta, "delta for T*");

  auto* lb = app.add_subcommand("lb-instance", "write a lower-bound family instance");
  std::size_t lb_n = 0;
  std::size_t lb_m = 0;
  std::size_t lb_k = 0;
  double lb_eps = 0.0;
  std::vector<std::size_t> lb_set;
  std::string lb_out;
  lb->add_option("--n", lb_n)->required();
  lb->add_option("--m", lb_m)->required();
  lb->add_option("--k", lb_k)->required();
  lb->add_option("--eps", lb_eps)->required();
  lb->add_option("--set", lb_set, "raised arm indices (k - 1 or m of them)");
  lb->add_option("--out", lb_out, "output file (default stdout)");

  auto* agg = app.add_subcommand("aggregate", "summarise a runs.csv");
  std::string agg_in;
  std::string agg_out;
  agg->add_option("--in", agg_in)->required();
  agg->add_option("--out", agg_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*run) {
      auto configs = load_configs(config_path);
      apply_jobs(configs, run_jobs);
      write_outputs(run_experiments(configs), run_out);
    } else if (*pre) {
      preset_options.parallelism = static_cast<std::size_t>(std::max(preset_jobs, 0));
      const auto configs = preset(preset_name, preset_options);
      fs::create_directories(preset_out);
      nlohmann::json j = nlohmann::json::array();
      for (const auto& c : configs) j.push_back(to_json(c));
      write_text_file((fs::path(preset_out) / "configs.json").string(), j.dump(2) + "\n");
      if (!dry_run) write_outputs(run_experiments(configs), preset_out);
    } else if (*hard) {
      const auto instance = load_instance(instance_path);
      const auto* finite = std::get_if<FiniteBandit>(&instance);
      detail::require(finite != nullptr, "hardness needs a finite instance");
      const auto d = gaps(*finite, hard_k, hard_m);
      const double h = hardness_from_gaps(d, hard_eps);
      std::cout << "arm,mean,gap\n";
      for (std::size_t a = 0; a < d.size(); ++a) {
        std::cout << a << ',' << format_shortest(finite->mean(a)) << ','
                  << format_shortest(d[a]) << '\n';
      }
      const auto budget = predicted_budget(h, hard_delta);
      std::cout << "H_eps," << format_shortest(h) << '\n';
      std::cout << "T_star," << budget.rounds << '\n';
      if (budget.degenerate) std::cerr << "warning: H_eps <= delta, T* reported as 0\n";
    } else if (*lb) {
      const auto text = format_instance(make_lower_bound_instance(lb_n, lb_m, lb_k, lb_eps, lb_set));
      if (lb_out.empty()) {
        std::cout << text;
      } else {
        write_text_file(lb_out, text);
      }
    } else if (*agg) {
      const auto summary = aggregate(parse_csv(read_text_file(agg_in)));
      write_text_file(agg_out, format_csv(summary));
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
