// Copyright (c) The revledger authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "revledger/client.hpp"
#include "revledger/harness/workload.hpp"
#include "revledger/ledger.hpp"

#include <benchmark/benchmark.h>

using namespace revledger;
using revledger::harness::derive_key;

namespace
{
  // A ledger of about range(1) entries holding one chain of range(0) links.
  struct ChainWorld
  {
    KeyPair utp = derive_key(9, "utp", 0);
    std::unique_ptr<Ledger> ledger;
    GroupId group;
    MemberChain chain;
    PublicKey subject;

    ChainWorld(std::size_t length, std::size_t entries)
    {
      LedgerOptions options;
      options.keep_audit_stream = false;
      options.block_events = entries + length + 1;
      options.clock = [] { return std::uint64_t{1700000000}; };
      ledger = std::make_unique<Ledger>(utp, options);
      const auto owner = derive_key(9, "owner", 0);
      const auto filler_subject = derive_key(9, "filler", 0).public_key();
      for (std::size_t i = length; i < entries; ++i)
      {
        GroupId g(owner.public_key(), "filler-" + std::to_string(i));
        ledger->append_unvalidated(
          issue_certificate(owner, filler_subject, g, Role::member(), 0), std::nullopt);
      }
      group = GroupId(owner.public_key(), "chain");
      std::vector<KeyPair> keys;
      keys.reserve(length);
      const KeyPair* issuer = &owner;
      for (std::size_t i = 0; i < length; ++i)
      {
        keys.push_back(derive_key(9, "link", i));
        const auto role = i + 1 == length ? Role::member() : Role::leader();
        auto cert =
          issue_certificate(*issuer, keys.back().public_key(), group, role, ledger->latest_t());
        ledger->submit({cert, chain});
        chain.push_back(cert);
        issuer = &keys.back();
      }
      ledger->publish_block();
      subject = keys.back().public_key();
    }
  };
}

static void BM_ClientCheckChain(benchmark::State& state)
{
  ChainWorld w(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)));
  LocalLedger local(*w.ledger);
  AccessClient client(local, w.utp.public_key());
  client.refresh();
  for (auto _ : state)
  {
    if (!client.check_chain(w.chain, w.group, Role::member(), w.subject).ok())
    {
      state.SkipWithError("chain did not verify");
    }
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_ClientCheckChain)->Args({5, 1000})->Args({50, 100000})->Unit(benchmark::kMillisecond);

static void BM_LedgerCheckChain(benchmark::State& state)
{
  ChainWorld w(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)));
  for (auto _ : state)
  {
    if (!w.ledger->internal_check_chain(w.chain, w.group, Role::member(), w.subject).ok())
    {
      state.SkipWithError("chain did not verify");
    }
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_LedgerCheckChain)->Args({5, 1000})->Args({50, 100000})->Unit(benchmark::kMillisecond);

static void BM_SubmitOwnerAdd(benchmark::State& state)
{
  LedgerOptions options;
  options.keep_audit_stream = false;
  options.block_events = 1u << 30;
  options.clock = [] { return std::uint64_t{1700000000}; };
  const auto utp = derive_key(10, "utp", 0);
  Ledger ledger(utp, options);
  const auto owner = derive_key(10, "owner", 0);
  std::vector<MemberCertificate> certs;
  for (std::size_t i = 0; i < 20000; ++i)
  {
    certs.push_back(issue_certificate(
      owner, derive_key(10, "member", i).public_key(),
      GroupId(owner.public_key(), "g"), Role::member(), 0));
  }
  std::size_t i = 0;
  for (auto _ : state)
  {
    if (i == certs.size())
    {
      state.SkipWithError("out of prepared events");
      break;
    }
    benchmark::DoNotOptimize(ledger.submit({certs[i++], {}}));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_SubmitOwnerAdd)->Iterations(20000);
