// Copyright (c) The revledger authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "revledger/auditor.hpp"
#include "revledger/encoding.hpp"
#include "revledger/prefix_tree.hpp"

#include <benchmark/benchmark.h>
#include <random>

using namespace revledger;

namespace
{
  Digest random_digest(std::mt19937_64& rng)
  {
    Digest d;
    for (auto& b : d.bytes)
    {
      b = static_cast<std::uint8_t>(rng());
    }
    return d;
  }

  struct Populated
  {
    PrefixTree tree;
    std::vector<Digest> indices;
    SequenceNumber t = 0;
  };

  // Trees are expensive to build; share one per size.
  Populated& populated(std::size_t n)
  {
    static std::map<std::size_t, Populated> cache;
    auto [it, fresh] = cache.try_emplace(n);
    if (fresh)
    {
      std::mt19937_64 rng(n);
      for (std::size_t i = 0; i < n; ++i)
      {
        it->second.indices.push_back(random_digest(rng));
        it->second.tree.insert(it->second.indices.back(), ++it->second.t, random_digest(rng));
      }
    }
    return it->second;
  }
}

static void BM_Sha256_64B(benchmark::State& state)
{
  Bytes data(64, 0xab);
  for (auto _ : state)
  {
    benchmark::DoNotOptimize(hash(data));
  }
}
BENCHMARK(BM_Sha256_64B);

// Insert plus update proof into a tree of about range(0) entries.
static void BM_InsertWithUpdateProof(benchmark::State& state)
{
  auto tree = populated(static_cast<std::size_t>(state.range(0))).tree;
  SequenceNumber t = 1u << 30;
  std::mt19937_64 rng(1);
  std::size_t bytes = 0;
  for (auto _ : state)
  {
    auto up = tree.insert(random_digest(rng), ++t, random_digest(rng));
    benchmark::DoNotOptimize(up);
    state.PauseTiming();
    bytes = encode(up).size();
    state.ResumeTiming();
  }
  state.counters["update_proof_bytes"] = static_cast<double>(bytes);
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_InsertWithUpdateProof)->Arg(1000)->Arg(100000);

static void BM_Lookup(benchmark::State& state)
{
  auto& p = populated(static_cast<std::size_t>(state.range(0)));
  std::size_t i = 0;
  for (auto _ : state)
  {
    benchmark::DoNotOptimize(p.tree.lookup(p.indices[i++ % p.indices.size()], false));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Lookup)->Arg(1000)->Arg(100000);

static void BM_VerifyPresenceProof(benchmark::State& state)
{
  auto& p = populated(static_cast<std::size_t>(state.range(0)));
  const auto root = p.tree.root();
  std::vector<Proof> proofs;
  for (std::size_t i = 0; i < 1024; ++i)
  {
    proofs.push_back(p.tree.lookup(p.indices[i % p.indices.size()], false));
  }
  std::size_t i = 0;
  for (auto _ : state)
  {
    const auto& proof = proofs[i++ % proofs.size()];
    if (!verify_proof(proof.index, proof, root))
    {
      state.SkipWithError("proof did not verify");
    }
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_VerifyPresenceProof)->Arg(1000)->Arg(100000);

static void BM_CheckUpdate(benchmark::State& state)
{
  auto tree = populated(static_cast<std::size_t>(state.range(0))).tree;
  std::mt19937_64 rng(2);
  SequenceNumber t = 1u << 30;
  struct Step
  {
    UpdateProof up;
    Digest before;
    Digest after;
  };
  std::vector<Step> steps;
  for (int i = 0; i < 1024; ++i)
  {
    const auto before = tree.root();
    auto up = tree.insert(random_digest(rng), ++t, random_digest(rng));
    steps.push_back({std::move(up), before, tree.root()});
  }
  std::size_t i = 0;
  for (auto _ : state)
  {
    const auto& s = steps[i++ % steps.size()];
    benchmark::DoNotOptimize(check_update(s.up, s.before, s.after));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_CheckUpdate)->Arg(1000)->Arg(100000);

static void BM_ProofStreamAuditor(benchmark::State& state)
{
  auto tree = populated(100000).tree;
  auto utp = KeyPair::from_seed(Bytes(32, 7));
  std::mt19937_64 rng(3);
  SequenceNumber t = 1u << 30;
  const auto first = make_block(utp, 0, Digest{}, tree.root(), t, 0);
  std::vector<UpdateProof> feed;
  for (int i = 0; i < 4096; ++i)
  {
    feed.push_back(tree.insert(random_digest(rng), ++t, random_digest(rng)));
  }
  for (auto _ : state)
  {
    state.PauseTiming();
    Auditor auditor(KeyPair::from_seed(Bytes(32, 9)), utp.public_key(), AuditorMode::proof_stream);
    auditor.attach(first.hash());
    auditor.ingest_block(first);
    state.ResumeTiming();
    for (const auto& up : feed)
    {
      auditor.ingest_update(up);
    }
    if (auditor.halted())
    {
      state.SkipWithError("auditor rejected an honest feed");
    }
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(feed.size()));
}
BENCHMARK(BM_ProofStreamAuditor)->Unit(benchmark::kMillisecond);
