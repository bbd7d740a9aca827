// Copyright (c) The revledger authors. All rights reserved.
// Licensed under the Apache 2.0 License.
#pragma once

#include "revledger/ledger.hpp"
#include "revledger/wire.hpp"

#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <tuple>
#include <vector>

namespace revledger::harness
{
  /// Directory under the system temp dir, removed on destruction.
  class ScratchDir
  {
  public:
    ScratchDir();
    ~ScratchDir();
    ScratchDir(const ScratchDir&) = delete;
    ScratchDir& operator=(const ScratchDir&) = delete;

    const std::filesystem::path& path() const
    {
      return path_;
    }

  private:
    std::filesystem::path path_;
  };

  struct WorkloadConfig
  {
    std::size_t max_keys = 20;
    std::size_t max_events = 300;
    std::size_t groups = 3;
    /// Blocks are published every 1..max_block_events accepted events.
    std::size_t max_block_events = 8;
  };

  /// Deterministic key for (seed, label, i).
  KeyPair derive_key(std::uint64_t seed, std::string_view label, std::size_t i);

  using Triple = std::tuple<GroupId, Role, PublicKey>;

  /// Random add/revoke/suspend/resume/certificate-revocation traffic from a
  /// fixed population, including attempts the ledger must refuse. Tracks each
  /// key's current chain per (group, role): the chain of its latest accepted
  /// grant. Group owners are never revoked.
  class Workload
  {
  public:
    Workload(std::uint64_t seed, WorkloadConfig config = {});

    /// Submits `events` requests (a random count up to the maximum if zero)
    /// to `api`, or directly to `ledger`. Freshness stamps come from the
    /// ledger's latest sequence number, or now and then from its latest block.
    void run(Ledger& ledger, LedgerApi* api = nullptr, std::size_t events = 0);
    /// One random request; returns whether it was accepted.
    bool step(Ledger& ledger, LedgerApi& api);

    const std::vector<KeyPair>& keys() const
    {
      return keys_;
    }
    const std::vector<GroupId>& groups() const
    {
      return groups_;
    }
    const KeyPair& owner_of(const GroupId& g) const;
    /// Current chain per triple, including the owners' empty leader chains.
    const std::map<Triple, MemberChain>& chains() const
    {
      return chains_;
    }
    /// Triples to verify: every tracked chain plus a few that never held a
    /// role, with the empty chain.
    std::vector<std::pair<Triple, MemberChain>> queries();

    std::size_t submitted() const
    {
      return submitted_;
    }
    std::size_t accepted() const
    {
      return accepted_;
    }
    std::mt19937_64& rng()
    {
      return rng_;
    }
    const std::vector<ProofOfDelivery>& pods() const
    {
      return pods_;
    }

  private:
    const KeyPair& pick_key();
    const GroupId& pick_group();
    const KeyPair* pick_leader(const GroupId& g);
    MemberChain chain_of(const GroupId& g, const PublicKey& leader) const;
    SequenceNumber freshness(Ledger& ledger);
    bool submit(LedgerApi& api, SubmitRequest request);

    std::mt19937_64 rng_;
    WorkloadConfig config_;
    std::vector<KeyPair> keys_;
    std::map<PublicKey, std::size_t> key_index_;
    std::vector<GroupId> groups_;
    std::map<GroupId, std::size_t> owners_;
    std::map<Triple, MemberChain> chains_;
    std::map<GroupId, PublicKey> suspended_;
    std::vector<ProofOfDelivery> pods_;
    std::size_t submitted_ = 0;
    std::size_t accepted_ = 0;
  };

  struct EquivalenceResult
  {
    std::size_t events = 0;
    std::size_t accepted = 0;
    std::size_t triples = 0;
    std::size_t members = 0;
    std::size_t disagreements = 0;
    std::size_t unauthorized_in_log = 0;
    std::vector<std::string> details;
  };

  /// Runs one seeded workload against a persistent ledger, replays its event
  /// log with the oracle, and compares verify_member over the loopback wire
  /// with the oracle for every query triple.
  EquivalenceResult run_equivalence(std::uint64_t seed, WorkloadConfig config = {});
}
