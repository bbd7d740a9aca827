// Copyright (c) The revledger authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "revledger/oracle.hpp"
#include "revledger/harness/render.hpp"

#include <CLI11.hpp>

using namespace revledger;
using namespace revledger::harness;
using nlohmann::json;

namespace
{
  /// "<owner hex>:<name>"; the name may itself contain ':'.
  GroupId parse_group(const std::string& text)
  {
    const auto colon = text.find(':');
    if (colon == std::string::npos)
    {
      throw std::invalid_argument("group must be <owner hex>:<name>");
    }
    return GroupId(PublicKey::from_hex(text.substr(0, colon)), text.substr(colon + 1));
  }
}

int main(int argc, char** argv)
{
  CLI::App app{"revledger replay oracle"};
  app.require_subcommand(1);

  std::string data;
  std::vector<std::string> query;
  std::optional<std::uint64_t> at;
  bool list = false;

  auto* replay_cmd = app.add_subcommand("replay", "Decide roles by replaying a ledger's history");
  replay_cmd->add_option("--data", data, "Ledger data directory")->required();
  replay_cmd->add_option("--query", query, "<owner hex>:<group> <role> <key hex>")
    ->expected(3);
  replay_cmd->add_option("--at", at, "Only events with t <= this");
  replay_cmd->add_flag("--list", list, "Print every (group, role, key) the history names");

  CLI11_PARSE(app, argc, argv);

  try
  {
    const auto history = read_history(data);
    GlobalHistory prefix;
    for (const auto& e : history)
    {
      if (!at || e.t <= *at)
      {
        prefix.push_back(e);
      }
    }
    const auto roles = replay(prefix);
    json summary{
      {"events", prefix.size()},
      {"last_t", roles.last_t()},
      {"ignored", roles.ignored()},
    };
    emit(summary);

    if (list)
    {
      for (const auto& [g, r, k] : roles.known_triples())
      {
        emit({
          {"group", render(g)},
          {"role", r.tag()},
          {"key", k.hex()},
          {"holds", roles.has_role(g, r, k)},
        });
      }
    }
    if (!query.empty())
    {
      const auto g = parse_group(query[0]);
      const Role r(query[1]);
      const auto k = PublicKey::from_hex(query[2]);
      const bool holds = roles.has_role(g, r, k);
      json j{{"group", render(g)}, {"role", r.tag()}, {"key", k.hex()}, {"holds", holds}};
      if (const auto s = roles.suspender(g))
      {
        j["suspended_by"] = s->hex();
      }
      emit(j);
      return holds ? 0 : 2;
    }
    return 0;
  }
  catch (const std::exception& e)
  {
    emit({{"error", e.what()}});
    return 1;
  }
}
