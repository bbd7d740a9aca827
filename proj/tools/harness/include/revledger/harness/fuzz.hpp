// Copyright (c) The revledger authors. All rights reserved.
// Licensed under the Apache 2.0 License.
#pragma once

#include "revledger/auditor.hpp"
#include "revledger/harness/workload.hpp"

#include <optional>
#include <string>
#include <vector>

namespace revledger::harness
{
  enum class Fault
  {
    mutate_history,
    delete_entry,
    fork,
    drop_update,
    non_monotonic_t,
    store_unauthorized_rev,
    refuse_valid_event,
    omit_after_pod,
  };

  std::string to_string(Fault f);
  /// Accepts "MutateHistory" or "mutate-history" spellings.
  std::optional<Fault> parse_fault(std::string_view name);
  std::vector<Fault> all_faults();

  /// The operator's view of the ledger as a misbehaving UTP would present it:
  /// it holds the signing key, forwards to an honest ledger by default, and
  /// can substitute the audit feed, the latest block, or submit answers.
  class ByzantineLedger : public LedgerApi
  {
  public:
    ByzantineLedger(Ledger& ledger, KeyPair utp);

    enum class SubmitMode
    {
      honest,
      /// Answers with a signed refusal for the given reason.
      refuse,
      /// Answers with a signed POD and drops the event.
      omit,
    };

    void set_submit_mode(SubmitMode mode, RejectReason reason = RejectReason::unauthorized)
    {
      submit_mode_ = mode;
      refuse_reason_ = reason;
    }
    /// Serves `feed` instead of the ledger's audit feed.
    void set_feed(std::vector<AuditItem> feed)
    {
      feed_ = std::move(feed);
    }
    void set_latest(Block b)
    {
      latest_ = std::move(b);
    }

    SubmitResponse submit(const SubmitRequest& request) override;
    QueryResponse query(
      const Digest& index, std::optional<std::uint64_t> height) override;
    SignedAuthorization fetch_authorization(const Digest& event_hash) override;
    Block latest_block() override;
    std::optional<Block> block_at(std::uint64_t height) override;
    std::vector<AuditItem> audit_items(
      std::size_t cursor, std::size_t max, bool compact_updates) override;

  private:
    Ledger& ledger_;
    LocalLedger local_;
    KeyPair utp_;
    SubmitMode submit_mode_ = SubmitMode::honest;
    RejectReason refuse_reason_ = RejectReason::unauthorized;
    std::optional<std::vector<AuditItem>> feed_;
    std::optional<Block> latest_;
  };

  /// Forged audit feeds, tampering with an update at feed position `from`
  /// or later. Each returns nullopt if the honest feed offers no place to
  /// apply the fault.
  std::optional<std::vector<AuditItem>> forge_mutation(
    const std::vector<AuditItem>& honest,
    const KeyPair& utp,
    std::mt19937_64& rng,
    bool delete_entry,
    std::size_t from = 0);
  std::optional<std::vector<AuditItem>> forge_drop(
    const std::vector<AuditItem>& honest, std::mt19937_64& rng, std::size_t from = 0);
  std::optional<std::vector<AuditItem>> forge_non_monotonic(
    const std::vector<AuditItem>& honest, std::mt19937_64& rng, std::size_t from = 0);

  struct FuzzRun
  {
    std::optional<Fault> fault;
    std::uint64_t seed = 0;
    /// Misbehavior records and alarms, as "auditor-full:RootMismatch" or
    /// "client:ForkDetected".
    std::vector<std::string> signals;
    /// Every client alarm's evidence verified offline.
    bool evidence_ok = true;
    std::string error;

    bool detected() const
    {
      return !signals.empty();
    }
  };

  /// One seeded workload with at most one injected fault, checked by a
  /// full-copy auditor, a proof-stream auditor and a client.
  FuzzRun fuzz_once(std::optional<Fault> fault, std::uint64_t seed);

  struct FuzzClassReport
  {
    std::optional<Fault> fault;
    std::size_t runs = 0;
    std::size_t detected = 0;
    std::size_t evidence_failures = 0;
    std::map<std::string, std::size_t> signals;
  };

  /// `runs` runs per fault class; a nullopt entry means honest runs.
  std::vector<FuzzClassReport> fuzz(
    const std::vector<std::optional<Fault>>& classes,
    std::size_t runs,
    std::uint64_t seed);
}
