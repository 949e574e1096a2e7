#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "kmbandit/harness.hpp"

using namespace kmbandit;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small_lucb() {
  ExperimentConfig c;
  c.experiment_id = "small";
  c.algorithm = Algorithm::lucb_km;
  c.instance.generator = "finite";
  c.instance.means = {0.8, 0.6, 0.5, 0.3, 0.2};
  c.k = 2;
  c.m = 3;
  c.epsilon = 0.1;
  c.delta = 0.1;
  c.runs = 24;
  c.base_seed = 1000;
  return c;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("kmbandit_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(KMBANDIT_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, JsonRoundTrip) {
  auto c = small_lucb();
  c.h_star_mode = HStarRule::argmax_lcb;
  c.scheme = BoundKind::hoeffding;
  const auto j = to_json(c);
  const auto back = config_from_json(j);
  EXPECT_EQ(to_json(back), j);
  EXPECT_EQ(back.instance.means, c.instance.means);
  EXPECT_EQ(*back.m, 3u);
  EXPECT_EQ(back.h_star_mode, HStarRule::argmax_lcb);

  ExperimentConfig r;
  r.algorithm = Algorithm::opt_qp;
  r.instance.generator = "two_level";
  r.instance.top_arms = 2;
  r.instance.arms = 10;
  r.rho = 0.2;
  r.qf_solver = Algorithm::f2;
  EXPECT_EQ(to_json(config_from_json(to_json(r))), to_json(r));
}

TEST(Config, FieldDiagnostics) {
  auto j = to_json(small_lucb());
  j["epsilon"] = 0.0;
  try {
    config_from_json(j);
    FAIL() << "expected a usage error";
  } catch (const UsageError& e) {
    EXPECT_NE(std::string(e.what()).find("epsilon"), std::string::npos);
  }
  auto unknown = to_json(small_lucb());
  unknown["epsilonn"] = 0.1;
  EXPECT_THROW(config_from_json(unknown), UsageError);
  auto wrong_type = to_json(small_lucb());
  wrong_type["runs"] = "many";
  EXPECT_THROW(config_from_json(wrong_type), UsageError);
  auto bad_algo = to_json(small_lucb());
  bad_algo["algorithm"] = "thompson";
  EXPECT_THROW(config_from_json(bad_algo), UsageError);
  EXPECT_THROW(configs_from_json(nlohmann::json::array()), UsageError);
}

TEST(Config, CombinationChecks) {
  auto f2_k2 = small_lucb();
  f2_k2.algorithm = Algorithm::f2;
  EXPECT_THROW(run_experiment(f2_k2), UsageError);
  auto no_m = small_lucb();
  no_m.m.reset();
  EXPECT_THROW(run_experiment(no_m), UsageError);
  auto lucb_on_reservoir = small_lucb();
  lucb_on_reservoir.instance.generator = "uniform_means";
  lucb_on_reservoir.m.reset();
  lucb_on_reservoir.rho = 0.1;
  EXPECT_THROW(run_experiment(lucb_on_reservoir), UsageError);
  auto kind_discrete = small_lucb();
  kind_discrete.algorithm = Algorithm::k_independent_qp;
  EXPECT_THROW(run_experiment(kind_discrete), UsageError);
}

TEST(Run, DegenerateSingleRun) {
  ExperimentConfig c;
  c.instance.generator = "finite";
  c.instance.means = {1.0, 0.0};
  c.m = 1;
  c.runs = 1;
  const auto rows = run_experiment(c);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_FALSE(rows[0].mistake);
  EXPECT_EQ(rows[0].seed, 0u);
  const auto summary = aggregate(runs_table(rows));
  EXPECT_EQ(summary.rows[0][summary.column("stderr_samples")], "0");
}

TEST(Run, CsvSchema) {
  const auto rows = run_experiment(small_lucb());
  const auto text = format_csv(runs_table(rows));
  EXPECT_EQ(text.substr(0, text.find('\n')),
            "experiment_id,algorithm,n,m,k,rho,epsilon,delta,scheme,h_star_mode,seed,run_index,"
            "samples,rounds,mistake,pulls_b1,pulls_b2,pulls_b3");
  const auto table = parse_csv(text);
  ASSERT_EQ(table.rows.size(), 24u);
  const auto& r0 = table.rows[0];
  EXPECT_EQ(r0[table.column("rho")], "");
  EXPECT_EQ(r0[table.column("n")], "5");
  EXPECT_EQ(r0[table.column("scheme")], "kl");
  EXPECT_EQ(r0[table.column("h_star_mode")], "argmin");
  EXPECT_EQ(r0[table.column("seed")], "1000");
  EXPECT_EQ(table.rows[23][table.column("seed")], "1023");
  EXPECT_EQ(text.find('\r'), std::string::npos);
}

TEST(Run, ParallelismDoesNotChangeRows) {
  auto c = small_lucb();
  c.parallelism = 1;
  const auto serial = format_csv(runs_table(run_experiment(c)));
  c.parallelism = 8;
  const auto parallel = format_csv(runs_table(run_experiment(c)));
  EXPECT_EQ(serial, parallel);
  EXPECT_EQ(serial, format_csv(runs_table(run_experiment(c))));
}

TEST(Run, SeedIsolation) {
  auto c = small_lucb();
  const auto all = run_experiment(c);
  c.base_seed += 5;
  c.runs -= 5;
  const auto shifted = run_experiment(c);
  for (std::size_t i = 0; i < shifted.size(); ++i) {
    auto expected = to_fields(all[i + 5]);
    auto got = to_fields(shifted[i]);
    const std::size_t run_index_col = 11;
    expected[run_index_col].clear();
    got[run_index_col].clear();
    EXPECT_EQ(got, expected);
  }
}

TEST(Run, ReservoirAndEmbeddedAlgorithms) {
  ExperimentConfig c;
  c.algorithm = Algorithm::kqp1;
  c.instance.generator = "two_level";
  c.instance.arms = 100;
  c.instance.top_arms = 15;
  c.rho = 0.15;
  c.k = 5;
  c.runs = 4;
  const auto rows = run_experiment(c);
  for (const auto& r : rows) {
    EXPECT_EQ(*r.n, 100u);
    EXPECT_FALSE(r.m.has_value());
    EXPECT_FALSE(r.rounds.has_value());
    EXPECT_TRUE(r.scheme.empty());
  }

  ExperimentConfig e;
  e.algorithm = Algorithm::p3;
  e.instance.generator = "linear";
  e.instance.n = 10;
  e.m = 2;
  e.runs = 3;
  for (const auto& r : run_experiment(e)) {
    EXPECT_DOUBLE_EQ(*r.rho, 0.2);
    ASSERT_TRUE(r.pulls_by_group.has_value());
    const auto& g = *r.pulls_by_group;
    EXPECT_EQ(g[0] + g[1] + g[2], r.samples);
  }

  ExperimentConfig o = e;
  o.algorithm = Algorithm::opt_qp;
  for (const auto& r : run_experiment(o)) {
    EXPECT_EQ(r.scheme, "kl");
    EXPECT_EQ(r.h_star_mode, "argmin");
  }
}

TEST(Aggregate, WorkedExample) {
  CsvTable runs;
  runs.header = runs_header();
  for (std::string s : {"100", "102", "98"}) {
    runs.rows.push_back({"e", "lucb_km", "10", "1", "1", "", "0.05", "0.001", "kl", "argmin", "1",
                         "0", s, "5", "0", "50", "0", s == "100" ? "50" : (s == "102" ? "52" : "48")});
  }
  const auto summary = aggregate(runs);
  ASSERT_EQ(summary.rows.size(), 1u);
  const auto& row = summary.rows[0];
  EXPECT_EQ(row[summary.column("runs")], "3");
  EXPECT_EQ(row[summary.column("mean_samples")], "100");
  EXPECT_NEAR(std::stod(row[summary.column("stderr_samples")]), 1.1547005383792515, 1e-15);
  EXPECT_EQ(row[summary.column("mistake_rate")], "0");
  const double f1 = std::stod(row[summary.column("frac_b1")]);
  const double f3 = std::stod(row[summary.column("frac_b3")]);
  EXPECT_NEAR(f1 + f3, 1.0, 1e-9);
}

TEST(Aggregate, MistakesGroupsAndErrors) {
  CsvTable runs;
  runs.header = runs_header();
  auto row = [](std::string algo, std::string mistake) {
    return std::vector<std::string>{"e", algo, "", "", "1", "0.2", "0.05", "0.1", "", "", "1",
                                    "0", "10", "", mistake, "", "", ""};
  };
  runs.rows = {row("p3", "1"), row("kqp1", "0"), row("p3", "1")};
  const auto summary = aggregate(runs);
  ASSERT_EQ(summary.rows.size(), 2u);
  EXPECT_EQ(summary.rows[0][1], "p3");
  EXPECT_EQ(summary.rows[0][summary.column("mistake_rate")], "1");
  EXPECT_EQ(summary.rows[0][summary.column("frac_b1")], "");
  EXPECT_EQ(summary.rows[1][1], "kqp1");
  EXPECT_THROW(aggregate(CsvTable{runs_header(), {}}), UsageError);
}

TEST(Aggregate, ReaggregationIsExact) {
  const auto table = runs_table(run_experiment(small_lucb()));
  const auto direct = format_csv(aggregate(table));
  const auto reparsed = format_csv(aggregate(parse_csv(format_csv(table))));
  EXPECT_EQ(direct, reparsed);
  const auto summary = parse_csv(direct);
  double total = 0.0;
  for (const char* col : {"frac_b1", "frac_b2", "frac_b3"}) {
    total += std::stod(summary.rows[0][summary.column(col)]);
  }
  EXPECT_NEAR(total, 1.0, 1e-9);
}

TEST(Preset, Counts) {
  PresetOptions full;
  full.full = true;
  EXPECT_EQ(preset("fig1", full).size(), 10u);
  EXPECT_EQ(preset("fig1").size(), 6u);
  EXPECT_EQ(preset("fig2").size(), 10u);
  const auto fig3 = preset("fig3");
  ASSERT_EQ(fig3.size(), 6u);
  std::vector<std::size_t> ks;
  for (const auto& c : fig3) ks.push_back(c.k);
  EXPECT_EQ(ks, (std::vector<std::size_t>{1, 2, 3, 5, 8, 10}));
  for (const auto& c : preset("fig1", full)) {
    EXPECT_EQ(*c.m * 10, c.instance.n);
    EXPECT_EQ(c.runs, 100u);
    EXPECT_EQ(c.scheme, BoundKind::kl);
  }
  PresetOptions tenth;
  tenth.scale = 0.1;
  EXPECT_EQ(preset("fig2", tenth).front().runs, 10u);
  EXPECT_THROW(preset("fig4"), UsageError);
}

TEST(Cli, ExitCodes) {
  const auto dir = scratch("cli");
  EXPECT_EQ(run_cli("--help"), 0);
  EXPECT_EQ(run_cli(""), 1);
  EXPECT_EQ(run_cli("preset --name fig9 --out " + dir.string()), 1);
  EXPECT_EQ(run_cli("aggregate --in " + (dir / "missing.csv").string() + " --out x.csv"), 1);

  const auto bad_instance = dir / "bad.txt";
  write_text_file(bad_instance.string(), "kind=finite\nmeans=[0.5, 0.4]\n");
  auto cfg = to_json(small_lucb());
  cfg["instance"] = {{"file", (dir / "nope.txt").string()}};
  write_text_file((dir / "missing_file.json").string(), cfg.dump());
  EXPECT_EQ(run_cli("run --config " + (dir / "missing_file.json").string() + " --out " +
                    dir.string()),
                2);

  EXPECT_EQ(run_cli("hardness --instance " + bad_instance.string() + " --k 1 --m 1 --eps 0.1"), 0);
  EXPECT_EQ(run_cli("lb-instance --n 6 --m 2 --k 1 --eps 0.1 --set 2 3 --out " +
                    (dir / "lb.txt").string()),
            0);
  const auto lb = parse_instance(read_text_file((dir / "lb.txt").string()));
  EXPECT_EQ(std::get<FiniteBandit>(lb).means(),
            make_lower_bound_instance(6, 2, 1, 0.1, std::vector<std::size_t>{2, 3}).means());
  EXPECT_EQ(run_cli("lb-instance --n 6 --m 2 --k 1 --eps 0.2"), 1);
}

TEST(Cli, RunThenAggregateMatches) {
  const auto dir = scratch("run");
  nlohmann::json arr = nlohmann::json::array();
  arr.push_back(to_json(small_lucb()));
  auto second = small_lucb();
  second.experiment_id = "second";
  second.algorithm = Algorithm::f2;
  second.k = 1;
  arr.push_back(to_json(second));
  write_text_file((dir / "cfg.json").string(), arr.dump(2));
  ASSERT_EQ(run_cli("run --config " + (dir / "cfg.json").string() + " --out " + dir.string() +
                    " --jobs 8"),
            0);
  const auto first_runs = read_text_file((dir / "runs.csv").string());
  ASSERT_EQ(run_cli("run --config " + (dir / "cfg.json").string() + " --out " + dir.string() +
                    " --jobs 1"),
            0);
  EXPECT_EQ(read_text_file((dir / "runs.csv").string()), first_runs);
  ASSERT_EQ(run_cli("aggregate --in " + (dir / "runs.csv").string() + " --out " +
                    (dir / "again.csv").string()),
            0);
  EXPECT_EQ(read_text_file((dir / "again.csv").string()),
            read_text_file((dir / "summary.csv").string()));
  EXPECT_EQ(parse_csv(read_text_file((dir / "summary.csv").string())).rows.size(), 2u);
}
