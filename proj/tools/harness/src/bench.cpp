// Copyright (c) The revledger authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "revledger/harness/bench.hpp"

#include "revledger/auditor.hpp"
#include "revledger/client.hpp"
#include "revledger/encoding.hpp"
#include "revledger/harness/workload.hpp"

#include <chrono>
#include <sys/utsname.h>
#include <thread>

namespace revledger::harness
{
  namespace
  {
    using steady = std::chrono::steady_clock;

    double seconds_since(steady::time_point start)
    {
      return std::chrono::duration<double>(steady::now() - start).count();
    }

    Digest digest_of(std::uint64_t seed, std::string_view label, std::size_t i)
    {
      Encoder e(TypeTag::request);
      e.u64(seed).field(label).u64(i);
      return hash(e.bytes());
    }

    void bench_tree(const BenchConfig& c, BenchReport& r)
    {
      std::vector<Digest> indices(c.entries);
      std::vector<Digest> events(c.entries);
      for (std::size_t i = 0; i < c.entries; ++i)
      {
        indices[i] = digest_of(c.seed, "index", i);
        events[i] = digest_of(c.seed, "event", i);
      }

      PrefixTree tree;
      // Sizes are sampled over the last tenth, when the tree is near N.
      const auto sample_from = c.entries - c.entries / 10;
      std::size_t sampled = 0;
      double proof_bytes = 0;
      const auto start = steady::now();
      for (std::size_t i = 0; i < c.entries; ++i)
      {
        auto up = tree.insert(indices[i], i + 1, events[i]);
        if (i >= sample_from)
        {
          const auto size = encode(up).size();
          proof_bytes += static_cast<double>(size);
          r.max_update_proof_bytes = std::max(r.max_update_proof_bytes, size);
          ++sampled;
        }
      }
      const auto elapsed = seconds_since(start);
      r.inserts_per_s = static_cast<double>(c.entries) / elapsed;
      r.mean_update_proof_bytes = sampled > 0 ? proof_bytes / static_cast<double>(sampled) : 0;

      double depth = 0;
      double presence_bytes = 0;
      for (const auto& index : indices)
      {
        const auto p = tree.lookup(index, false);
        depth += static_cast<double>(p.depth);
        r.max_leaf_depth = std::max(r.max_leaf_depth, p.depth);
        presence_bytes += static_cast<double>(encode(p).size());
      }
      r.mean_leaf_depth = depth / static_cast<double>(c.entries);
      r.mean_presence_proof_bytes = presence_bytes / static_cast<double>(c.entries);

      // Proof-stream auditor, attached at a block over the populated tree.
      const auto utp = derive_key(c.seed, "bench-utp", 0);
      const auto first = make_block(utp, 0, Digest{}, tree.root(), c.entries, 0);
      Auditor auditor(derive_key(c.seed, "bench-auditor", 0), utp.public_key(), AuditorMode::proof_stream);
      auditor.attach(first.hash());
      auditor.ingest_block(first);

      std::vector<UpdateProof> feed;
      feed.reserve(c.auditor_updates);
      double stream_bytes = 0;
      for (std::size_t i = 0; i < c.auditor_updates; ++i)
      {
        const auto t = c.entries + i + 1;
        feed.push_back(tree.insert(digest_of(c.seed, "more", i), t, digest_of(c.seed, "more-event", i)));
        stream_bytes += static_cast<double>(encode(AuditItem{feed.back()}).size());
      }
      const auto next = make_block(utp, 1, first.hash(), tree.root(), c.entries + c.auditor_updates, 0);

      const auto audit_start = steady::now();
      for (const auto& up : feed)
      {
        auditor.ingest_update(up);
      }
      auditor.ingest_block(next);
      const auto audit_elapsed = seconds_since(audit_start);
      if (auditor.halted())
      {
        throw std::logic_error("bench auditor rejected an honest feed");
      }
      r.auditor_updates_per_s = static_cast<double>(c.auditor_updates) / audit_elapsed;
      r.stream_bytes_per_update = c.auditor_updates > 0 ?
        stream_bytes / static_cast<double>(c.auditor_updates) :
        0;
      r.full_copy_bytes_per_update = c.auditor_updates > 0 ?
        encode(AuditItem{compact(feed.front())}).size() :
        0;
      r.stream_state_bytes = auditor.state_size();
    }

    void bench_chain(const BenchConfig& c, BenchReport& r)
    {
      LedgerOptions options;
      options.keep_audit_stream = false;
      options.block_events = c.entries + c.chain_length + 1;
      options.clock = [] { return std::uint64_t{1700000000}; };
      const auto utp = derive_key(c.seed, "bench-utp", 1);
      Ledger ledger(utp, options);

      const auto owner = derive_key(c.seed, "bench-owner", 0);
      const auto filler_subject = derive_key(c.seed, "bench-filler", 0).public_key();
      const auto filler = c.entries > c.chain_length ? c.entries - c.chain_length : 0;
      for (std::size_t i = 0; i < filler; ++i)
      {
        GroupId g(owner.public_key(), "filler-" + std::to_string(i));
        ledger.append_unvalidated(
          issue_certificate(owner, filler_subject, g, Role::member(), 0), std::nullopt);
      }

      // owner -> k1 -> ... -> kL, leaders except the last link.
      GroupId g(owner.public_key(), "chain");
      MemberChain chain;
      const KeyPair* issuer = &owner;
      std::vector<KeyPair> keys;
      keys.reserve(c.chain_length);
      for (std::size_t i = 0; i < c.chain_length; ++i)
      {
        keys.push_back(derive_key(c.seed, "bench-link", i));
        const auto role = i + 1 == c.chain_length ? Role::member() : Role::leader();
        auto cert = issue_certificate(*issuer, keys.back().public_key(), g, role, ledger.latest_t());
        if (!std::holds_alternative<ProofOfDelivery>(ledger.submit({cert, chain})))
        {
          throw std::logic_error("bench chain link refused");
        }
        chain.push_back(cert);
        issuer = &keys.back();
      }
      ledger.publish_block();
      const auto subject = keys.back().public_key();

      LocalLedger local(ledger);
      AccessClient client(local, utp.public_key());
      client.refresh();
      const auto start = steady::now();
      for (std::size_t i = 0; i < c.chain_runs; ++i)
      {
        if (!client.check_chain(chain, g, Role::member(), subject).ok())
        {
          throw std::logic_error("bench chain does not verify");
        }
      }
      r.chain_verifications_per_s = static_cast<double>(c.chain_runs) / seconds_since(start);

      const auto internal_start = steady::now();
      for (std::size_t i = 0; i < c.chain_runs; ++i)
      {
        if (!ledger.internal_check_chain(chain, g, Role::member(), subject).ok())
        {
          throw std::logic_error("bench chain does not verify at the ledger");
        }
      }
      r.internal_chain_checks_per_s =
        static_cast<double>(c.chain_runs) / seconds_since(internal_start);
    }

    nlohmann::json machine()
    {
      utsname u{};
      ::uname(&u);
      return {
        {"system", std::string(u.sysname) + " " + u.release},
        {"arch", u.machine},
        {"hardware_threads", std::thread::hardware_concurrency()},
        {"compiler", __VERSION__},
        {"threads_used", 1},
      };
    }
  }

  BenchReport run_bench(const BenchConfig& config)
  {
    BenchReport r;
    r.config = config;
    bench_tree(config, r);
    bench_chain(config, r);
    return r;
  }

  std::vector<nlohmann::json> to_json_lines(const BenchReport& r)
  {
    const nlohmann::json config{
      {"entries", r.config.entries},
      {"chain_length", r.config.chain_length},
      {"chain_runs", r.config.chain_runs},
      {"auditor_updates", r.config.auditor_updates},
      {"seed", r.config.seed},
    };
    const auto m = machine();
    auto line = [&](const char* section, nlohmann::json values) {
      values["section"] = section;
      values["config"] = config;
      values["machine"] = m;
      return values;
    };
    return {
      line(
        "tree",
        {{"inserts_per_s", r.inserts_per_s},
         {"ns_per_insert", 1e9 / r.inserts_per_s},
         {"mean_update_proof_bytes", r.mean_update_proof_bytes},
         {"max_update_proof_bytes", r.max_update_proof_bytes},
         {"mean_presence_proof_bytes", r.mean_presence_proof_bytes},
         {"mean_leaf_depth", r.mean_leaf_depth},
         {"max_leaf_depth", r.max_leaf_depth}}),
      line(
        "chain",
        {{"chain_verifications_per_s", r.chain_verifications_per_s},
         {"internal_chain_checks_per_s", r.internal_chain_checks_per_s}}),
      line(
        "auditor",
        {{"auditor_updates_per_s", r.auditor_updates_per_s},
         {"stream_bytes_per_update", r.stream_bytes_per_update},
         {"full_copy_bytes_per_update", r.full_copy_bytes_per_update},
         {"stream_state_bytes", r.stream_state_bytes}}),
    };
  }
}
