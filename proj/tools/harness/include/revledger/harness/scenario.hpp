// Copyright (c) The revledger authors. All rights reserved.
// Licensed under the Apache 2.0 License.
#pragma once

#include "revledger/harness/fuzz.hpp"

#include <json.hpp>
#include <string>
#include <vector>

namespace revledger::harness
{
  /// One scripted action. Which fields matter depends on `op`:
  ///
  ///   add, revoke            by, group, role, subject, expect[, blocking]
  ///   suspend, resume        by, group, expect[, blocking]
  ///   revoke-cert            by, cert_of = {group, role, subject}, expect
  ///   hold                   label, then an add/revoke/suspend/resume built
  ///                          now and submitted by a later `release`
  ///   release                label, expect[, blocking]
  ///   verify                 by (the verifier), group, role, subject, expect
  ///                          ("member", "not-member" or "alarm:<Kind>")
  ///   partition, heal        by: cut or restore the actor's ledger link
  ///   inject                 fault (a Fault name); StoreUnauthorizedRev also
  ///                          takes by, group, role, subject
  ///   expect-alarm           by, kind
  ///   confirm                by: check POD inclusion
  ///   sync                   auditor sync and client refresh
  ///
  /// `expect` for submissions is "accepted" or a refusal reason name.
  /// `blocking` names the actor whose event the refusal must cite.
  struct Step
  {
    std::string op;
    std::string by;
    std::string group;
    std::string role = "member";
    std::string subject;
    std::string expect;
    std::string blocking;
    std::string label;
    std::string fault;
    std::string kind;
    /// Target certificate of revoke-cert.
    std::string cert_group;
    std::string cert_role;
    std::string cert_subject;
    /// Inner action of a hold.
    std::string action;
  };

  struct GroupSpec
  {
    std::string name;
    std::string owner;
  };

  struct Scenario
  {
    std::string name;
    std::uint64_t seed = 0;
    std::vector<std::string> actors;
    std::vector<GroupSpec> groups;
    std::vector<Step> steps;
  };

  Scenario scenario_from_json(const nlohmann::json& j);
  nlohmann::json to_json(const Scenario& s);

  std::vector<std::string> builtin_scenario_names();
  /// The scripts for a built-in name; a race yields one script per
  /// interleaving. Empty if the name is unknown.
  std::vector<Scenario> builtin_scenarios(std::string_view name, std::uint64_t seed);

  struct ScenarioResult
  {
    std::string name;
    bool passed = true;
    /// One line per step; identical for identical scripts and seeds.
    std::vector<std::string> transcript;
    std::vector<std::string> failures;
  };

  /// Runs the script against an in-process ledger, proof-stream auditor and
  /// one client per actor, all over the loopback wire. Every verify step is
  /// also checked against the replay oracle.
  ScenarioResult run_scenario(const Scenario& s);
}
