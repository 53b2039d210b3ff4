// Command-line front end: inject duplicate users and time the twin fast path
// against the traditional rebuild (bench), run the randomised
// oracle-equivalence suite (verify), or report similarity-list distributions
// and candidate-set sizes (analyze).

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "twincf/bench.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCorrectness = 1;
constexpr int kExitUsage = 2;

const std::map<std::string, twincf::DatasetSource> kFormatNames{
    {"movielens", twincf::DatasetSource::movielens},
    {"csv", twincf::DatasetSource::csv},
    {"synthetic", twincf::DatasetSource::synthetic},
};

const std::map<std::string, twincf::BenchConfig::Mode> kModeNames{
    {"user", twincf::BenchConfig::Mode::user},
    {"item", twincf::BenchConfig::Mode::item},
};

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  return out;
}

int cmd_bench(const twincf::BenchConfig& config, const std::string& out_path) {
  twincf::BenchResult result = twincf::run_bench(config);
  if (!out_path.empty()) {
    auto out = open_out(out_path);
    twincf::write_bench_csv(result, out);
  } else {
    twincf::write_bench_csv(result, std::cout);
  }
  std::cout << "dataset: " << result.meta.name << " (" << result.meta.users << " users, "
            << result.meta.items << " items, " << result.meta.ratings << " ratings)\n"
            << "template user (withheld): " << result.template_user << "\n"
            << "initial store size: " << result.initial_store_users << " lists\n"
            << "twinsearch total: " << result.twinsearch_total_ns << " ns\n"
            << "baseline total:   " << result.baseline_total_ns << " ns\n";
  if (result.twinsearch_total_ns > 0)
    std::printf("speedup: %.2fx\n", static_cast<double>(result.baseline_total_ns) /
                                        static_cast<double>(result.twinsearch_total_ns));
  return kExitOk;
}

int cmd_verify(const twincf::VerifyConfig& config) {
  twincf::VerifyReport report = twincf::run_verify(config);
  if (report.vacuous()) {
    std::cout << "warning: 0 trials requested, nothing verified (vacuous pass)\n";
    return kExitOk;
  }
  if (report.passed()) {
    std::cout << "verify: " << report.trials << " trials passed\n";
    return kExitOk;
  }
  std::cout << "verify: " << report.failures.size() << " of " << report.trials
            << " trials FAILED\n";
  for (const twincf::VerifyFailure& f : report.failures)
    std::cout << "  seed " << f.seed << ": " << f.reason << "\n";
  return kExitCorrectness;
}

int cmd_analyze(const twincf::AnalyzeConfig& config, const std::string& out_path) {
  twincf::AnalyzeReport report = twincf::run_analyze(config);
  if (!out_path.empty()) {
    auto out = open_out(out_path);
    twincf::write_analyze_csv(report, out);
    auto set0_out = open_out(out_path + ".set0.csv");
    twincf::write_set0_csv(report, set0_out);
    std::cout << "wrote " << report.users.size() << " user rows to " << out_path << "\n"
              << "wrote " << report.set0_samples.size() << " candidate-set samples to "
              << out_path << ".set0.csv\n";
  } else {
    twincf::write_analyze_csv(report, std::cout);
    twincf::write_set0_csv(report, std::cout);
  }
  std::printf("median |Set_0| = %g, n/125 = %g, ratio = %g\n", report.median_set0, report.bound,
              report.ratio);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"twincf: duplicate-user fast path for similarity-list maintenance"};
  app.require_subcommand(1);

  twincf::BenchConfig bench;
  std::string bench_out;
  CLI::App* bench_cmd = app.add_subcommand("bench", "time twin insertion vs full rebuild");
  bench_cmd->add_option("--dataset", bench.data.path, "dataset file path");
  bench_cmd->add_option("--format", bench.data.format, "movielens|csv|synthetic")
      ->transform(CLI::CheckedTransformer(kFormatNames, CLI::ignore_case));
  bench_cmd->add_option("--mode", bench.mode, "user|item")
      ->transform(CLI::CheckedTransformer(kModeNames, CLI::ignore_case));
  bench_cmd->add_option("--k", bench.twins, "number of duplicate users to inject");
  bench_cmd->add_option("--c", bench.anchors, "anchor users probed per twin search");
  bench_cmd->add_option("--seed", bench.seed, "random seed");
  bench_cmd->add_option("--tolerance", bench.tolerance, "similarity-equality epsilon");
  bench_cmd->add_option("--out", bench_out, "CSV output path");
  bench_cmd->add_option("--reps", bench.repetitions, "timings per measurement (median kept)");
  bench_cmd->add_option("--n", bench.data.users, "synthetic: user count");
  bench_cmd->add_option("--m", bench.data.items, "synthetic: item count");
  bench_cmd->add_option("--density", bench.data.density, "synthetic: ratings per user / items");

  twincf::VerifyConfig verify;
  CLI::App* verify_cmd = app.add_subcommand("verify", "randomised oracle-equivalence suite");
  verify_cmd->add_option("--trials", verify.trials, "number of random instances");
  verify_cmd->add_option("--seed", verify.seed, "base seed");
  verify_cmd->add_option("--c", verify.anchors, "anchor users per twin search");
  verify_cmd->add_option("--tolerance", verify.tolerance, "similarity-equality epsilon");

  twincf::AnalyzeConfig analyze;
  std::string analyze_out;
  CLI::App* analyze_cmd = app.add_subcommand("analyze", "similarity distribution report");
  analyze_cmd->add_option("--dataset", analyze.data.path, "dataset file path");
  analyze_cmd->add_option("--format", analyze.data.format, "movielens|csv|synthetic")
      ->transform(CLI::CheckedTransformer(kFormatNames, CLI::ignore_case));
  analyze_cmd->add_option("--x", analyze.x, "number of buckets partitioning [0,1]");
  analyze_cmd->add_option("--seeds", analyze.seeds, "twin injections sampled for |Set_0|");
  analyze_cmd->add_option("--c", analyze.anchors, "anchor users per twin search");
  analyze_cmd->add_option("--seed", analyze.seed, "base seed");
  analyze_cmd->add_option("--tolerance", analyze.tolerance, "similarity-equality epsilon");
  analyze_cmd->add_option("--out", analyze_out, "CSV output path");
  analyze_cmd->add_option("--n", analyze.data.users, "synthetic: user count");
  analyze_cmd->add_option("--m", analyze.data.items, "synthetic: item count");
  analyze_cmd->add_option("--density", analyze.data.density, "synthetic: density");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (bench_cmd->parsed()) {
      if (bench.data.format == twincf::DatasetSource::synthetic) bench.data.seed = bench.seed;
      return cmd_bench(bench, bench_out);
    }
    if (verify_cmd->parsed()) return cmd_verify(verify);
    if (analyze_cmd->parsed()) {
      if (analyze.data.format == twincf::DatasetSource::synthetic)
        analyze.data.seed = analyze.seed;
      return cmd_analyze(analyze, analyze_out);
    }
  } catch (const twincf::StoreDivergenceError& e) {
    std::cerr << "correctness failure: " << e.what() << "\n";
    return kExitCorrectness;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
