// Copyright (c) The revledger authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "revledger/auditor.hpp"
#include "revledger/harness/keystore.hpp"
#include "revledger/harness/render.hpp"

#include <CLI11.hpp>
#include <atomic>
#include <chrono>
#include <csignal>
#include <thread>

using namespace revledger;
using namespace revledger::harness;

namespace
{
  std::atomic<bool> stop_requested = false;

  void on_signal(int)
  {
    stop_requested = true;
  }
}

int main(int argc, char** argv)
{
  CLI::App app{"revledger auditor"};
  app.require_subcommand(1);

  std::string mode_name = "stream";
  std::string ledger_address = "127.0.0.1:7400";
  std::string listen = "127.0.0.1:7500";
  std::string key_file = "auditor.key";
  std::string utp_hex;
  std::string trust_block;
  std::uint64_t poll_ms = 500;
  bool once = false;

  auto* run = app.add_subcommand("run", "Follow the ledger's audit feed and serve endorsements");
  run->add_option("--mode", mode_name, "full or stream")
    ->check(CLI::IsMember({"full", "stream"}));
  run->add_option("--ledger", ledger_address, "Ledger host:port");
  run->add_option("--listen", listen, "Address to serve clients on");
  run->add_option("--key", key_file, "Auditor key file; created if missing");
  run->add_option("--utp", utp_hex, "Ledger public key (hex), as `ledger pubkey` prints")
    ->envname("REVLEDGER_UTP")
    ->required();
  run->add_option(
    "--trust-block", trust_block, "Hash (hex) of the block verification starts from");
  run->add_option("--poll-ms", poll_ms, "Feed polling interval");
  run->add_flag("--once", once, "Sync once, report and exit");

  CLI11_PARSE(app, argc, argv);

  try
  {
    const auto key = load_or_create_key(key_file);
    RemoteLedger ledger(std::make_shared<TcpTransport>(parse_address(ledger_address)));
    const auto mode = mode_name == "full" ? AuditorMode::full_copy : AuditorMode::proof_stream;
    Auditor auditor(key, PublicKey::from_hex(utp_hex), mode);
    auditor.set_relay(&ledger);
    if (!trust_block.empty())
    {
      auditor.attach(Digest::from_hex(trust_block));
    }

    std::optional<TcpServer> server;
    if (!once)
    {
      server.emplace(parse_address(listen), auditor_handler(auditor));
    }
    emit({
      {"status", "auditing"},
      {"mode", to_string(mode)},
      {"public_key", key.public_key().hex()},
      {"utp", utp_hex},
      {"listen", once ? nlohmann::json() : nlohmann::json(server->port())},
    });

    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::size_t endorsed = 0;
    std::size_t reported = 0;
    do
    {
      try
      {
        auditor.sync(ledger);
      }
      catch (const TransportError& e)
      {
        emit({{"warning", e.what()}});
      }
      const auto endorsements = auditor.endorsed_blocks();
      for (; endorsed < endorsements.size(); ++endorsed)
      {
        emit(render(endorsements[endorsed]));
      }
      const auto found = auditor.misbehaviors();
      for (; reported < found.size(); ++reported)
      {
        emit(render(found[reported]));
      }
      if (once)
      {
        break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(poll_ms));
    } while (!stop_requested);

    emit({
      {"status", auditor.halted() ? "halted" : "ok"},
      {"root", auditor.current_root().hex()},
      {"state_bytes", auditor.state_size()},
    });
    if (server)
    {
      server->stop();
    }
    return auditor.halted() ? 3 : 0;
  }
  catch (const std::exception& e)
  {
    emit({{"error", e.what()}});
    return 1;
  }
}
