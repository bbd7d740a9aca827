// Copyright (c) The revledger authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "revledger/harness/fuzz.hpp"

#include "revledger/client.hpp"

#include <algorithm>
#include <cctype>

namespace revledger::harness
{
  namespace
  {
    struct FaultName
    {
      Fault fault;
      const char* name;
    };

    constexpr FaultName fault_names[] = {
      {Fault::mutate_history, "MutateHistory"},
      {Fault::delete_entry, "DeleteEntry"},
      {Fault::fork, "Fork"},
      {Fault::drop_update, "DropUpdate"},
      {Fault::non_monotonic_t, "NonMonotonicT"},
      {Fault::store_unauthorized_rev, "StoreUnauthorizedRev"},
      {Fault::refuse_valid_event, "RefuseValidEvent"},
      {Fault::omit_after_pod, "OmitAfterPod"},
    };

    std::string fold(std::string_view s)
    {
      std::string out;
      for (char c : s)
      {
        if (c != '-' && c != '_')
        {
          out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        }
      }
      return out;
    }

    std::vector<std::size_t> update_positions(const std::vector<AuditItem>& feed)
    {
      std::vector<std::size_t> out;
      for (std::size_t i = 0; i < feed.size(); ++i)
      {
        if (std::holds_alternative<UpdateProof>(feed[i]))
        {
          out.push_back(i);
        }
      }
      return out;
    }

    /// Picks an update k >= `first` whose feed position is at least `from`.
    std::optional<std::size_t> pick_update(
      const std::vector<std::size_t>& updates,
      std::size_t first,
      std::size_t from,
      std::mt19937_64& rng)
    {
      std::vector<std::size_t> candidates;
      for (auto k = first; k < updates.size(); ++k)
      {
        if (updates[k] >= from)
        {
          candidates.push_back(k);
        }
      }
      if (candidates.empty())
      {
        return std::nullopt;
      }
      return candidates[rng() % candidates.size()];
    }

    const Block* last_block_before(const std::vector<AuditItem>& feed, std::size_t end)
    {
      for (std::size_t i = end; i-- > 0;)
      {
        if (const auto* b = std::get_if<Block>(&feed[i]))
        {
          return b;
        }
      }
      return nullptr;
    }
  }

  std::string to_string(Fault f)
  {
    for (const auto& n : fault_names)
    {
      if (n.fault == f)
      {
        return n.name;
      }
    }
    return "Unknown";
  }

  std::optional<Fault> parse_fault(std::string_view name)
  {
    const auto wanted = fold(name);
    for (const auto& n : fault_names)
    {
      if (fold(n.name) == wanted)
      {
        return n.fault;
      }
    }
    return std::nullopt;
  }

  std::vector<Fault> all_faults()
  {
    std::vector<Fault> out;
    for (const auto& n : fault_names)
    {
      out.push_back(n.fault);
    }
    return out;
  }

  ByzantineLedger::ByzantineLedger(Ledger& ledger, KeyPair utp) :
    ledger_(ledger),
    local_(ledger),
    utp_(std::move(utp))
  {}

  SubmitResponse ByzantineLedger::submit(const SubmitRequest& request)
  {
    switch (submit_mode_)
    {
      case SubmitMode::honest:
        return local_.submit(request);
      case SubmitMode::refuse:
      {
        Rejection r;
        r.reason = refuse_reason_;
        r.event_hash = event_hash(request.event);
        r.detail = to_string(refuse_reason_);
        r.t_latest = ledger_.latest_t();
        r.sig = utp_.sign(signing_payload(r));
        return r;
      }
      case SubmitMode::omit:
      {
        const auto b = ledger_.latest_block();
        ProofOfDelivery pod{
          event_hash(request.event), b.height, b.hash(), b.t_latest, b.t_utc, {}};
        pod.sig = utp_.sign(signing_payload(pod));
        return pod;
      }
    }
    return local_.submit(request);
  }

  QueryResponse ByzantineLedger::query(
    const Digest& index, std::optional<std::uint64_t> height)
  {
    return local_.query(index, height);
  }

  SignedAuthorization ByzantineLedger::fetch_authorization(const Digest& event_hash)
  {
    return local_.fetch_authorization(event_hash);
  }

  Block ByzantineLedger::latest_block()
  {
    return latest_ ? *latest_ : local_.latest_block();
  }

  std::optional<Block> ByzantineLedger::block_at(std::uint64_t height)
  {
    if (latest_ && latest_->height == height)
    {
      return latest_;
    }
    return local_.block_at(height);
  }

  std::vector<AuditItem> ByzantineLedger::audit_items(
    std::size_t cursor, std::size_t max, bool compact_updates)
  {
    if (!feed_)
    {
      return local_.audit_items(cursor, max, compact_updates);
    }
    std::vector<AuditItem> out;
    for (auto i = cursor; i < feed_->size() && out.size() < max; ++i)
    {
      const auto* up = std::get_if<UpdateProof>(&(*feed_)[i]);
      if (up != nullptr && compact_updates)
      {
        out.emplace_back(compact(*up));
      }
      else
      {
        out.push_back((*feed_)[i]);
      }
    }
    return out;
  }

  std::optional<std::vector<AuditItem>> forge_mutation(
    const std::vector<AuditItem>& honest,
    const KeyPair& utp,
    std::mt19937_64& rng,
    bool delete_entry,
    std::size_t from)
  {
    const auto updates = update_positions(honest);
    const auto picked = pick_update(updates, 1, from, rng);
    if (!picked)
    {
      return std::nullopt;
    }
    const auto k = *picked;
    const auto j = rng() % k;

    // Rebuild the tree with entry j altered or removed, then present update
    // k as if it had been applied to that tree.
    PrefixTree forged_tree;
    for (std::size_t i = 0; i < k; ++i)
    {
      const auto c = compact(std::get<UpdateProof>(honest[updates[i]]));
      if (i != j)
      {
        forged_tree.insert(c.index, c.t, c.event_hash);
      }
      else if (!delete_entry)
      {
        Bytes tweak(c.event_hash.view().begin(), c.event_hash.view().end());
        tweak.push_back(0x01);
        forged_tree.insert(c.index, c.t, hash(tweak));
      }
    }
    const auto& honest_k = std::get<UpdateProof>(honest[updates[k]]);
    const auto c = compact(honest_k);
    UpdateProof forged = honest_k;
    forged.after = forged_tree.insert(c.index, c.t, c.event_hash).after;

    const auto* prev = last_block_before(honest, updates[k]);
    if (prev == nullptr)
    {
      return std::nullopt;
    }
    std::vector<AuditItem> out(
      honest.begin(), honest.begin() + static_cast<std::ptrdiff_t>(updates[k]));
    out.emplace_back(forged);
    out.emplace_back(make_block(
      utp, prev->height + 1, prev->hash(), forged_tree.root(), c.t, prev->t_utc));
    return out;
  }

  std::optional<std::vector<AuditItem>> forge_drop(
    const std::vector<AuditItem>& honest, std::mt19937_64& rng, std::size_t from)
  {
    const auto updates = update_positions(honest);
    const auto k = pick_update(updates, 0, from, rng);
    if (!k)
    {
      return std::nullopt;
    }
    auto out = honest;
    out.erase(out.begin() + static_cast<std::ptrdiff_t>(updates[*k]));
    return out;
  }

  std::optional<std::vector<AuditItem>> forge_non_monotonic(
    const std::vector<AuditItem>& honest, std::mt19937_64& rng, std::size_t from)
  {
    const auto updates = update_positions(honest);
    const auto picked = pick_update(updates, 1, from, rng);
    if (!picked)
    {
      return std::nullopt;
    }
    const auto k = *picked;
    auto out = honest;
    auto& up = std::get<UpdateProof>(out[updates[k]]);
    up.t = std::get<UpdateProof>(honest[updates[k - 1]]).t;
    return out;
  }

  namespace
  {
    using Query = std::pair<Triple, MemberChain>;

    /// Stores a revocation of a current member that its issuer had no
    /// authority to make, and returns the victim's query.
    std::optional<Query> inject_unauthorized_revocation(
      Ledger& ledger, Workload& w, const KeyPair& utp, std::uint64_t seed)
    {
      ledger.publish_block();
      LocalLedger local(ledger);
      AccessClient probe(local, utp.public_key());
      probe.refresh();

      std::vector<Query> members;
      std::vector<Query> former_leaders;
      for (const auto& [t, chain] : w.chains())
      {
        const auto& [g, role, key] = t;
        if (chain.empty())
        {
          continue;
        }
        const auto v = probe.verify_member(chain, g, role, key);
        if (v.verdict == Membership::is_member)
        {
          members.emplace_back(t, chain);
        }
        else if (role.is_leader() && v.verdict == Membership::not_member)
        {
          former_leaders.emplace_back(t, chain);
        }
      }
      auto& rng = w.rng();
      if (members.empty())
      {
        const auto& g = w.groups().front();
        const auto victim = derive_key(seed, "victim", 0).public_key();
        auto cert = issue_certificate(
          w.owner_of(g), victim, g, Role::member(), ledger.latest_t());
        if (!std::holds_alternative<ProofOfDelivery>(ledger.submit({cert, {}})))
        {
          return std::nullopt;
        }
        members.emplace_back(Triple{g, Role::member(), victim}, MemberChain{cert});
      }
      const auto victim = members[rng() % members.size()];
      const auto& [g, role, subject] = victim.first;

      std::vector<const Query*> same_group;
      for (const auto& q : former_leaders)
      {
        if (std::get<0>(q.first) == g)
        {
          same_group.push_back(&q);
        }
      }
      const auto variant = rng() % 3;
      if (variant == 2 && !same_group.empty())
      {
        // A leader whose role was revoked, presenting its old chain.
        const auto& [t, chain] = *same_group[rng() % same_group.size()];
        const auto it = std::find_if(w.keys().begin(), w.keys().end(), [&](const auto& k) {
          return k.public_key() == std::get<2>(t);
        });
        ledger.append_unvalidated(
          issue_revocation(*it, subject, g, role, ledger.latest_t()),
          StoredAuthorization{std::nullopt, chain});
        return victim;
      }
      // A key with no leadership, with an empty or a missing authorization.
      auto outsider = derive_key(seed, "outsider", 0);
      auto rev = issue_revocation(outsider, subject, g, role, ledger.latest_t());
      if (variant == 1)
      {
        ledger.append_unvalidated(rev, std::nullopt);
      }
      else
      {
        ledger.append_unvalidated(rev, StoredAuthorization{});
      }
      return victim;
    }

    void collect(const Auditor& a, const std::string& name, FuzzRun& run)
    {
      for (const auto& m : a.misbehaviors())
      {
        run.signals.push_back(name + ":" + to_string(m.kind));
      }
    }
  }

  FuzzRun fuzz_once(std::optional<Fault> fault, std::uint64_t seed)
  {
    FuzzRun run;
    run.fault = fault;
    run.seed = seed;

    const auto utp = derive_key(seed, "utp", 0);
    LedgerOptions options;
    options.block_events = 1 + seed % 8;
    options.clock = [] { return std::uint64_t{1700000000}; };
    Ledger ledger(utp, options);

    WorkloadConfig config;
    config.max_events = 80;
    Workload w(seed, config);
    w.run(ledger);
    auto& rng = w.rng();
    // Feed faults need a few updates to work on.
    for (std::size_t i = 0; ledger.latest_t() < 4; ++i)
    {
      const auto& g = w.groups().front();
      ledger.submit(
        {issue_certificate(
           w.owner_of(g),
           derive_key(seed, "filler", i).public_key(),
           g,
           Role::member(),
           ledger.latest_t()),
         {}});
    }

    std::optional<Query> victim;
    if (fault == Fault::store_unauthorized_rev)
    {
      victim = inject_unauthorized_revocation(ledger, w, utp, seed);
      if (!victim)
      {
        run.error = "no member to revoke";
      }
    }
    ledger.publish_block();

    ByzantineLedger proxy(ledger, utp);
    LocalLedger honest(ledger);
    if (fault == Fault::mutate_history || fault == Fault::delete_entry ||
        fault == Fault::drop_update || fault == Fault::non_monotonic_t)
    {
      const auto feed = honest.audit_items(0, ledger.audit_size(), false);
      std::optional<std::vector<AuditItem>> forged;
      switch (*fault)
      {
        case Fault::mutate_history:
        case Fault::delete_entry:
          forged = forge_mutation(feed, utp, rng, fault == Fault::delete_entry);
          break;
        case Fault::drop_update:
          forged = forge_drop(feed, rng);
          break;
        default:
          forged = forge_non_monotonic(feed, rng);
      }
      if (!forged)
      {
        run.error = "feed too short for " + to_string(*fault);
      }
      else
      {
        proxy.set_feed(std::move(*forged));
      }
    }
    if (fault == Fault::fork)
    {
      const auto b = ledger.latest_block();
      proxy.set_latest(make_block(
        utp, b.height, b.prev, hash(random_bytes(32)), b.t_latest, b.t_utc));
    }

    Auditor full(derive_key(seed, "auditor", 0), utp.public_key(), AuditorMode::full_copy);
    Auditor stream(
      derive_key(seed, "auditor", 1), utp.public_key(), AuditorMode::proof_stream);
    stream.set_relay(&honest);
    full.sync(proxy);
    stream.sync(proxy);

    AccessClient client(proxy, utp.public_key(), &stream);
    client.refresh();
    auto queries = w.queries();
    if (victim)
    {
      queries.push_back(*victim);
    }
    for (const auto& [triple, chain] : queries)
    {
      const auto& [g, role, key] = triple;
      client.verify_member(chain, g, role, key);
    }

    // A valid event in a fresh group, which the ledger has no ground to
    // refuse and must include.
    if (fault == Fault::refuse_valid_event)
    {
      constexpr RejectReason reasons[] = {
        RejectReason::stale_freshness,
        RejectReason::unauthorized,
        RejectReason::group_suspended,
        RejectReason::bad_signature,
        RejectReason::duplicate_event,
      };
      proxy.set_submit_mode(
        ByzantineLedger::SubmitMode::refuse, reasons[rng() % std::size(reasons)]);
    }
    if (fault == Fault::omit_after_pod)
    {
      proxy.set_submit_mode(ByzantineLedger::SubmitMode::omit);
    }
    const auto founder = derive_key(seed, "founder", 0);
    GroupId fresh_group(founder.public_key(), "fresh-" + std::to_string(seed));
    client.add_member(
      founder, {}, fresh_group, Role::member(), derive_key(seed, "newcomer", 0).public_key());
    proxy.set_submit_mode(ByzantineLedger::SubmitMode::honest);

    ledger.publish_block();
    full.sync(proxy);
    stream.sync(proxy);
    client.refresh();
    client.confirm_inclusion();

    collect(full, "auditor-full", run);
    collect(stream, "auditor-stream", run);
    for (const auto& a : client.alarms())
    {
      run.signals.push_back("client:" + to_string(a.kind));
      if (!verify_evidence(a, utp.public_key()))
      {
        run.evidence_ok = false;
      }
    }
    return run;
  }

  std::vector<FuzzClassReport> fuzz(
    const std::vector<std::optional<Fault>>& classes,
    std::size_t runs,
    std::uint64_t seed)
  {
    std::vector<FuzzClassReport> out;
    for (std::size_t c = 0; c < classes.size(); ++c)
    {
      FuzzClassReport report;
      report.fault = classes[c];
      for (std::size_t i = 0; i < runs; ++i)
      {
        const auto run = fuzz_once(classes[c], seed + c * 1000003 + i);
        ++report.runs;
        report.detected += run.detected() ? 1 : 0;
        report.evidence_failures += run.evidence_ok ? 0 : 1;
        for (const auto& s : run.signals)
        {
          ++report.signals[s];
        }
      }
      out.push_back(std::move(report));
    }
    return out;
  }
}
