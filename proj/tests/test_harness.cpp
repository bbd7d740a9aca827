// Copyright (c) The revledger authors. All rights reserved.
// Licensed under the Apache 2.0 License.
#include "revledger/harness/fuzz.hpp"
#include "revledger/harness/keystore.hpp"
#include "revledger/harness/scenario.hpp"
#include "revledger/harness/workload.hpp"
#include "temp_dir.hpp"

#include "doctest.h"
#include <fstream>

using namespace revledger;
using namespace revledger::harness;
using nlohmann::json;

namespace
{
  json read_json(const std::filesystem::path& p)
  {
    std::ifstream in(p);
    REQUIRE(in);
    return json::parse(in);
  }

  const std::filesystem::path scenario_dir = REVLEDGER_SCENARIO_DIR;
}

TEST_CASE("built-in scenarios pass with deterministic transcripts")
{
  for (const auto& name : builtin_scenario_names())
  {
    const auto scripts = builtin_scenarios(name, 5);
    REQUIRE_FALSE(scripts.empty());
    for (const auto& s : scripts)
    {
      const auto a = run_scenario(s);
      INFO(s.name);
      for (const auto& f : a.failures)
      {
        INFO(f);
      }
      CHECK(a.passed);
      CHECK(run_scenario(s).transcript == a.transcript);
    }
  }
  CHECK(builtin_scenarios("david-erik-race", 1).size() == 2);
  CHECK(builtin_scenarios("no-such-scenario", 1).empty());
}

TEST_CASE("scenario scripts round trip through JSON")
{
  for (const auto& name : builtin_scenario_names())
  {
    for (const auto& s : builtin_scenarios(name, 2))
    {
      const auto j = to_json(s);
      CHECK(to_json(scenario_from_json(j)) == j);
      CHECK(run_scenario(scenario_from_json(j)).transcript == run_scenario(s).transcript);
    }
  }
}

TEST_CASE("the shipped scenario files match the built-ins and pass")
{
  for (const auto& name : builtin_scenario_names())
  {
    for (const auto& s : builtin_scenarios(name, 1))
    {
      auto file = s.name;
      std::replace(file.begin(), file.end(), '/', '-');
      CHECK(read_json(scenario_dir / (file + ".json")) == to_json(s));
    }
  }
  const auto custom = scenario_from_json(read_json(scenario_dir / "partition-and-fork.json"));
  const auto r = run_scenario(custom);
  for (const auto& f : r.failures)
  {
    INFO(f);
  }
  CHECK(r.passed);
}

TEST_CASE("a wrong expectation fails the scenario")
{
  auto s = builtin_scenarios("alice-bob-carol", 1).front();
  for (auto& st : s.steps)
  {
    if (st.op == "verify" && !st.expect.empty())
    {
      st.expect = st.expect == "member" ? "not-member" : "member";
      break;
    }
  }
  const auto r = run_scenario(s);
  CHECK_FALSE(r.passed);
  CHECK(r.failures.size() == 1);
}

TEST_CASE("malformed scenario JSON is refused")
{
  CHECK_THROWS(scenario_from_json(json::array()));
  CHECK_THROWS(scenario_from_json(json{{"name", "x"}, {"steps", 3}}));
}

TEST_CASE("fault names parse loosely")
{
  CHECK(all_faults().size() == 8);
  for (auto f : all_faults())
  {
    CHECK(parse_fault(to_string(f)) == f);
  }
  CHECK(parse_fault("mutate-history") == Fault::mutate_history);
  CHECK(parse_fault("OMIT_AFTER_POD") == Fault::omit_after_pod);
  CHECK_FALSE(parse_fault("gremlins").has_value());
}

TEST_CASE("every fault is detected and honest runs raise nothing")
{
  for (auto f : all_faults())
  {
    for (std::uint64_t seed = 1; seed <= 3; ++seed)
    {
      const auto r = fuzz_once(f, seed);
      INFO(to_string(f), " seed ", seed, " ", r.error);
      CHECK(r.detected());
      CHECK(r.evidence_ok);
    }
  }
  for (std::uint64_t seed = 1; seed <= 10; ++seed)
  {
    const auto r = fuzz_once(std::nullopt, seed);
    INFO("honest seed ", seed);
    CHECK_FALSE(r.detected());
  }
}

TEST_CASE("equivalence over a few workloads")
{
  for (std::uint64_t seed = 1; seed <= 20; ++seed)
  {
    const auto r = run_equivalence(seed);
    INFO("seed ", seed);
    CHECK(r.disagreements == 0);
  }
}

TEST_CASE("keystore keeps keys, groups, chains and blocks")
{
  TempDir dir;
  Keystore ks(dir.path());
  const auto alice = ks.create_key("alice");
  CHECK_THROWS(ks.create_key("alice"));
  CHECK_THROWS(ks.create_key("../escape"));
  CHECK(ks.key("alice").public_key() == alice.public_key());
  CHECK(ks.resolve("alice") == alice.public_key());
  CHECK(ks.resolve(alice.public_key().hex()) == alice.public_key());
  CHECK(ks.name_of(alice.public_key()) == "alice");

  ks.add_group("course", alice.public_key());
  const auto g = ks.group("course");
  CHECK(g == GroupId(alice.public_key(), "course"));
  CHECK_THROWS(ks.group("unknown"));

  const auto bob = ks.create_key("bob");
  const MemberChain chain{issue_certificate(alice, bob.public_key(), g, Role::leader(), 0)};
  CHECK(ks.chain(g, Role::leader(), bob.public_key()).empty());
  ks.set_chain(g, Role::leader(), bob.public_key(), chain);
  CHECK(Keystore(dir.path()).chain(g, Role::leader(), bob.public_key()) == chain);

  CHECK_FALSE(ks.utp().has_value());
  ks.set_utp(bob.public_key());
  CHECK(ks.utp() == bob.public_key());
  const auto b = make_block(bob, 3, Digest{}, Digest{}, 7, 9);
  ks.set_trusted_block(b);
  CHECK(ks.trusted_block() == b);

  // Key files hold the canonical encoding; the public half is hex.
  std::ifstream in(dir.path() / "keys" / "alice.key", std::ios::binary);
  const Bytes raw((std::istreambuf_iterator<char>(in)), {});
  CHECK(raw == alice.encode());
  std::ifstream pub(dir.path() / "keys" / "alice.pub");
  std::string hex;
  pub >> hex;
  CHECK(hex == alice.public_key().hex());
}

TEST_CASE("load_or_create_key is stable across calls")
{
  TempDir dir;
  const auto file = dir.path() / "ledger.key";
  const auto a = load_or_create_key(file);
  CHECK(load_or_create_key(file).public_key() == a.public_key());
  CHECK(std::filesystem::exists(dir.path() / "ledger.key.pub"));
}
