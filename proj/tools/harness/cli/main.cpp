// Copyright (c) The revledger authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "revledger/harness/bench.hpp"
#include "revledger/harness/fuzz.hpp"
#include "revledger/harness/render.hpp"
#include "revledger/harness/scenario.hpp"
#include "revledger/harness/workload.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <fstream>
#include <iostream>

using namespace revledger;
using namespace revledger::harness;
using nlohmann::json;

namespace
{
  std::vector<Scenario> load_scenarios(const std::string& name, std::optional<std::uint64_t> seed)
  {
    if (name.ends_with(".json"))
    {
      std::ifstream in(name);
      if (!in)
      {
        throw std::runtime_error("cannot read " + name);
      }
      auto s = scenario_from_json(json::parse(in));
      if (seed)
      {
        s.seed = *seed;
      }
      return {s};
    }
    auto list = builtin_scenarios(name, seed.value_or(1));
    if (list.empty())
    {
      std::string known;
      for (const auto& n : builtin_scenario_names())
      {
        known += " " + n;
      }
      throw std::runtime_error("unknown scenario " + name + "; built-in:" + known);
    }
    return list;
  }

  std::vector<std::optional<Fault>> parse_faults(const std::vector<std::string>& names)
  {
    std::vector<std::optional<Fault>> out;
    for (const auto& n : names)
    {
      if (n == "all")
      {
        for (auto f : all_faults())
        {
          out.emplace_back(f);
        }
      }
      else if (n == "honest" || n == "none")
      {
        out.emplace_back(std::nullopt);
      }
      else if (auto f = parse_fault(n))
      {
        out.emplace_back(*f);
      }
      else
      {
        throw std::runtime_error("unknown fault " + n);
      }
    }
    return out;
  }

  double seconds_since(std::chrono::steady_clock::time_point start)
  {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
}

int main(int argc, char** argv)
{
  CLI::App app{"revledger test harness"};
  app.require_subcommand(1);

  std::string scenario_name;
  std::optional<std::uint64_t> seed;
  bool dump = false;
  bool quiet = false;
  auto* scenario = app.add_subcommand("scenario", "Run a built-in or JSON scenario");
  scenario->add_option("name", scenario_name, "Built-in name or a .json script")->required();
  scenario->add_option("--seed", seed);
  scenario->add_flag("--dump", dump, "Print the script as JSON instead of running it");
  scenario->add_flag("--quiet", quiet, "Only the result line");

  std::vector<std::string> faults{"all"};
  std::size_t runs = 100;
  std::size_t honest = 0;
  std::uint64_t fuzz_seed = 1;
  auto* fuzz_cmd = app.add_subcommand("fuzz", "Inject ledger faults and measure detection");
  fuzz_cmd->add_option("--faults", faults, "Fault names, 'all' or 'honest'")->delimiter(',');
  fuzz_cmd->add_option("--runs", runs, "Runs per fault");
  fuzz_cmd->add_option("--honest", honest, "Additional honest runs");
  fuzz_cmd->add_option("--seed", fuzz_seed);

  std::size_t eq_seeds = 100;
  std::uint64_t eq_first = 1;
  auto* equivalence = app.add_subcommand("equivalence", "Compare the client with the replay oracle");
  equivalence->add_option("--seeds", eq_seeds);
  equivalence->add_option("--first-seed", eq_first);

  BenchConfig bench_config;
  std::string out_file;
  auto* bench = app.add_subcommand("bench", "Measure throughput and message sizes");
  bench->add_option("--entries", bench_config.entries);
  bench->add_option("--chain-length", bench_config.chain_length);
  bench->add_option("--chain-runs", bench_config.chain_runs);
  bench->add_option("--auditor-updates", bench_config.auditor_updates);
  bench->add_option("--seed", bench_config.seed);
  bench->add_option("--out", out_file, "JSON lines file; stdout if omitted");

  CLI11_PARSE(app, argc, argv);

  try
  {
    if (*scenario)
    {
      bool all_passed = true;
      for (const auto& s : load_scenarios(scenario_name, seed))
      {
        if (dump)
        {
          std::cout << to_json(s).dump(2) << std::endl;
          continue;
        }
        const auto r = run_scenario(s);
        all_passed = all_passed && r.passed;
        if (!quiet)
        {
          for (const auto& line : r.transcript)
          {
            std::cout << line << "\n";
          }
        }
        emit({{"scenario", r.name}, {"passed", r.passed}, {"failures", r.failures}});
      }
      return all_passed ? 0 : 2;
    }

    if (*fuzz_cmd)
    {
      auto classes = parse_faults(faults);
      const auto start = std::chrono::steady_clock::now();
      auto reports = fuzz(classes, runs, fuzz_seed);
      if (honest > 0)
      {
        for (auto& r : fuzz({std::nullopt}, honest, fuzz_seed + 7777))
        {
          reports.push_back(std::move(r));
        }
      }
      bool ok = true;
      for (const auto& r : reports)
      {
        const bool expected = r.fault ? r.detected == r.runs : r.detected == 0;
        ok = ok && expected && r.evidence_failures == 0;
        emit({
          {"fault", r.fault ? to_string(*r.fault) : "Honest"},
          {"runs", r.runs},
          {"detected", r.detected},
          {"rate", r.runs == 0 ? 0.0 : double(r.detected) / double(r.runs)},
          {"evidence_failures", r.evidence_failures},
          {"signals", r.signals},
        });
      }
      emit({{"ok", ok}, {"seconds", seconds_since(start)}});
      return ok ? 0 : 2;
    }

    if (*equivalence)
    {
      const auto start = std::chrono::steady_clock::now();
      std::size_t disagreements = 0;
      std::size_t triples = 0;
      for (std::size_t i = 0; i < eq_seeds; ++i)
      {
        const auto r = run_equivalence(eq_first + i);
        disagreements += r.disagreements;
        triples += r.triples;
        for (const auto& d : r.details)
        {
          emit({{"seed", eq_first + i}, {"disagreement", d}});
        }
      }
      emit({
        {"workloads", eq_seeds},
        {"triples", triples},
        {"disagreements", disagreements},
        {"seconds", seconds_since(start)},
      });
      return disagreements == 0 ? 0 : 2;
    }

    if (*bench)
    {
      const auto lines = to_json_lines(run_bench(bench_config));
      std::ofstream file;
      if (!out_file.empty())
      {
        file.open(out_file);
        if (!file)
        {
          throw std::runtime_error("cannot write " + out_file);
        }
      }
      for (const auto& j : lines)
      {
        (out_file.empty() ? std::cout : file) << j.dump() << "\n";
      }
      return 0;
    }
  }
  catch (const std::exception& e)
  {
    emit({{"error", e.what()}});
    return 1;
  }
  return 1;
}
