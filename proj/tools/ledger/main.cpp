// Copyright (c) The revledger authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "revledger/harness/keystore.hpp"
#include "revledger/harness/render.hpp"
#include "revledger/ledger.hpp"
#include "revledger/wire.hpp"

#include <CLI11.hpp>
#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
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
  CLI::App app{"revledger ledger server"};
  app.require_subcommand(1);

  std::string listen = "127.0.0.1:7400";
  std::string data;
  std::uint64_t block_interval = 60;
  std::uint64_t block_events = 1000;
  std::string key_file = "ledger.key";

  auto* serve = app.add_subcommand("serve", "Run the ledger");
  serve->add_option("--listen", listen, "host:port to listen on");
  serve->add_option("--data", data, "Event log directory (REVLEDGER_DATA overrides)");
  serve->add_option("--block-interval", block_interval, "Seconds between blocks");
  serve->add_option("--block-events", block_events, "Accepted events per block");
  serve->add_option("--key", key_file, "Signing key file; created if missing");

  auto* pubkey = app.add_subcommand("pubkey", "Print the ledger's public key");
  pubkey->add_option("--key", key_file, "Signing key file; created if missing");

  CLI11_PARSE(app, argc, argv);

  try
  {
    const auto key = load_or_create_key(key_file);
    if (*pubkey)
    {
      emit({{"public_key", key.public_key().hex()}});
      return 0;
    }

    if (const char* env = std::getenv("REVLEDGER_DATA"); env != nullptr && *env != '\0')
    {
      data = env;
    }
    LedgerOptions options;
    options.block_interval = block_interval;
    options.block_events = std::max<std::uint64_t>(block_events, 1);
    if (!data.empty())
    {
      options.data_dir = data;
    }

    Ledger ledger(key, options);
    LocalLedger local(ledger);
    TcpServer server(parse_address(listen), ledger_handler(local));
    auto address = parse_address(listen);
    emit(
      {{"status", "listening"},
       {"address", address.host + ":" + std::to_string(server.port())},
       {"public_key", key.public_key().hex()},
       {"data", data},
       {"latest", render(ledger.latest_block())}});

    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    auto height = ledger.latest_block().height;
    while (!stop_requested)
    {
      std::this_thread::sleep_for(std::chrono::milliseconds(200));
      ledger.tick();
      const auto latest = ledger.latest_block();
      if (latest.height != height)
      {
        height = latest.height;
        emit({{"block", render(latest)}});
      }
    }
    server.stop();
    emit({{"status", "stopped"}, {"root", ledger.current_root().hex()}, {"t", ledger.latest_t()}});
    return 0;
  }
  catch (const std::exception& e)
  {
    emit({{"error", e.what()}});
    return 1;
  }
}
