// Copyright (c) The revledger authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "revledger/harness/workload.hpp"

#include "revledger/client.hpp"
#include "revledger/encoding.hpp"
#include "revledger/oracle.hpp"

namespace revledger::harness
{
  ScratchDir::ScratchDir() :
    path_(
      std::filesystem::temp_directory_path() /
      ("revledger-" + to_hex(random_bytes(8))))
  {
    std::filesystem::create_directories(path_);
  }

  ScratchDir::~ScratchDir()
  {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }

  KeyPair derive_key(std::uint64_t seed, std::string_view label, std::size_t i)
  {
    Encoder e(TypeTag::request);
    e.u64(seed).field(label).u64(i);
    return KeyPair::from_seed(hash(e.bytes()).view());
  }

  Workload::Workload(std::uint64_t seed, WorkloadConfig config) :
    rng_(seed),
    config_(config)
  {
    const auto n_keys =
      4 + rng_() % (std::max<std::size_t>(config_.max_keys, 4) - 3);
    for (std::size_t i = 0; i < n_keys; ++i)
    {
      keys_.push_back(derive_key(seed, "key", i));
      key_index_[keys_.back().public_key()] = i;
    }
    for (std::size_t i = 0; i < config_.groups; ++i)
    {
      const auto owner = rng_() % n_keys;
      GroupId g(keys_[owner].public_key(), "g" + std::to_string(i));
      groups_.push_back(g);
      owners_[g] = owner;
      chains_[{g, Role::leader(), g.owner}] = {};
    }
  }

  const KeyPair& Workload::owner_of(const GroupId& g) const
  {
    return keys_.at(owners_.at(g));
  }

  const KeyPair& Workload::pick_key()
  {
    return keys_[rng_() % keys_.size()];
  }

  const GroupId& Workload::pick_group()
  {
    return groups_[rng_() % groups_.size()];
  }

  const KeyPair* Workload::pick_leader(const GroupId& g)
  {
    auto s = suspended_.find(g);
    if (s != suspended_.end() && rng_() % 10 < 7)
    {
      return &keys_[key_index_.at(s->second)];
    }
    std::vector<const KeyPair*> leaders;
    for (const auto& [t, chain] : chains_)
    {
      const auto& [group, role, key] = t;
      if (group == g && role.is_leader())
      {
        leaders.push_back(&keys_[key_index_.at(key)]);
      }
    }
    return leaders[rng_() % leaders.size()];
  }

  MemberChain Workload::chain_of(const GroupId& g, const PublicKey& leader) const
  {
    auto it = chains_.find({g, Role::leader(), leader});
    return it == chains_.end() ? MemberChain{} : it->second;
  }

  SequenceNumber Workload::freshness(Ledger& ledger)
  {
    if (rng_() % 20 == 0)
    {
      return ledger.latest_block().t_latest;
    }
    return ledger.latest_t();
  }

  bool Workload::submit(LedgerApi& api, SubmitRequest request)
  {
    ++submitted_;
    auto response = api.submit(request);
    if (const auto* pod = std::get_if<ProofOfDelivery>(&response))
    {
      ++accepted_;
      pods_.push_back(*pod);
      return true;
    }
    return false;
  }

  bool Workload::step(Ledger& ledger, LedgerApi& api)
  {
    const auto& g = pick_group();
    const auto roll = rng_() % 100;
    const auto fresh = freshness(ledger);

    if (roll < 45)
    {
      const auto& issuer = rng_() % 100 < 85 ? *pick_leader(g) : pick_key();
      const auto& subject = pick_key();
      auto role = rng_() % 5 < 2 ? Role::leader() : Role::member();
      if (role.is_leader() && subject.public_key() == g.owner)
      {
        role = Role::member();
      }
      auto chain = chain_of(g, issuer.public_key());
      auto cert = issue_certificate(issuer, subject.public_key(), g, role, fresh);
      if (!submit(api, {cert, chain}))
      {
        return false;
      }
      chain.push_back(cert);
      chains_[{g, role, subject.public_key()}] = std::move(chain);
      return true;
    }

    if (roll < 70)
    {
      const auto& issuer = rng_() % 100 < 85 ? *pick_leader(g) : pick_key();
      std::vector<Triple> targets;
      for (const auto& [t, chain] : chains_)
      {
        if (std::get<0>(t) == g && !chain.empty())
        {
          targets.push_back(t);
        }
      }
      if (targets.empty())
      {
        return false;
      }
      const auto& [group, role, subject] = targets[rng_() % targets.size()];
      auto rev = issue_revocation(issuer, subject, group, role, fresh);
      return submit(api, {rev, chain_of(g, issuer.public_key())});
    }

    if (roll < 78)
    {
      const auto& issuer = *pick_leader(g);
      if (!submit(
            api, {issue_suspend(issuer, g, fresh), chain_of(g, issuer.public_key())}))
      {
        return false;
      }
      suspended_[g] = issuer.public_key();
      return true;
    }

    if (roll < 86)
    {
      auto s = suspended_.find(g);
      const auto& issuer = s != suspended_.end() && rng_() % 10 < 8 ?
        keys_[key_index_.at(s->second)] :
        *pick_leader(g);
      if (!submit(
            api, {issue_resume(issuer, g, fresh), chain_of(g, issuer.public_key())}))
      {
        return false;
      }
      suspended_.erase(g);
      return true;
    }

    if (roll < 94)
    {
      std::vector<const MemberChain*> registered;
      for (const auto& [t, chain] : chains_)
      {
        if (std::get<0>(t) == g && !chain.empty())
        {
          registered.push_back(&chain);
        }
      }
      if (registered.empty())
      {
        return false;
      }
      const auto& cert = registered[rng_() % registered.size()]->back();
      const auto h = certificate_hash(cert);
      if (rng_() % 2 == 0)
      {
        const auto& issuer = keys_[key_index_.at(cert.issuer)];
        return submit(api, {issue_cert_revocation(issuer, h, fresh), {}});
      }
      const auto& leader = *pick_leader(g);
      return submit(
        api,
        {issue_cert_revocation(leader, h, fresh),
         chain_of(g, leader.public_key()),
         g});
    }

    // A key presents someone else's leader chain.
    const auto& issuer = pick_key();
    const auto& other = *pick_leader(g);
    auto cert = issue_certificate(
      issuer, pick_key().public_key(), g, Role::member(), fresh);
    auto chain = chain_of(g, other.public_key());
    if (!submit(api, {cert, chain}))
    {
      return false;
    }
    chain.push_back(cert);
    chains_[{g, Role::member(), cert.subject}] = std::move(chain);
    return true;
  }

  void Workload::run(Ledger& ledger, LedgerApi* api, std::size_t events)
  {
    LocalLedger local(ledger);
    LedgerApi& target = api != nullptr ? *api : local;
    if (events == 0)
    {
      events = 1 + rng_() % config_.max_events;
    }
    for (std::size_t i = 0; i < events; ++i)
    {
      step(ledger, target);
    }
  }

  std::vector<std::pair<Triple, MemberChain>> Workload::queries()
  {
    std::vector<std::pair<Triple, MemberChain>> out(chains_.begin(), chains_.end());
    for (int i = 0; i < 4; ++i)
    {
      const auto& g = pick_group();
      const auto role = i % 2 == 0 ? Role::leader() : Role::member();
      Triple t{g, role, pick_key().public_key()};
      if (chains_.count(t) == 0)
      {
        out.emplace_back(t, MemberChain{});
      }
    }
    return out;
  }

  EquivalenceResult run_equivalence(std::uint64_t seed, WorkloadConfig config)
  {
    ScratchDir dir;
    LedgerOptions options;
    options.data_dir = dir.path();
    options.block_events = 1 + seed % std::max<std::size_t>(config.max_block_events, 1);
    options.clock = [] { return std::uint64_t{1700000000}; };
    options.keep_audit_stream = false;
    const auto utp = derive_key(seed, "utp", 0);

    EquivalenceResult result;
    Ledger ledger(utp, options);
    Workload workload(seed, config);
    workload.run(ledger);
    ledger.publish_block();
    result.events = workload.submitted();
    result.accepted = workload.accepted();

    const auto truth = replay(read_history(dir.path()));
    result.unauthorized_in_log = truth.ignored().size();

    LocalLedger local(ledger);
    auto loop = std::make_shared<LoopbackTransport>(ledger_handler(local));
    RemoteLedger remote(loop);
    AccessClient client(remote, utp.public_key());
    client.refresh();

    for (const auto& [triple, chain] : workload.queries())
    {
      const auto& [group, role, key] = triple;
      const auto v = client.verify_member(chain, group, role, key);
      const bool expected = truth.has_role(group, role, key);
      ++result.triples;
      result.members += expected ? 1 : 0;
      const bool agrees = v.verdict != Membership::alarm &&
        (v.verdict == Membership::is_member) == expected;
      if (!agrees)
      {
        ++result.disagreements;
        result.details.push_back(
          "seed " + std::to_string(seed) + " group " + group.name + " role " +
          role.tag() + " key " + key.hex().substr(0, 16) + " oracle " +
          (expected ? "member" : "not-member") + " verifier " +
          (v.verdict == Membership::is_member ?
             "member" :
             v.verdict == Membership::not_member ? "not-member" :
                                                   "alarm: " + v.alarm->detail) +
          " chain " + to_string(v.decision.status));
      }
    }
    return result;
  }
}
