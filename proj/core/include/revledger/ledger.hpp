// Copyright (c) The revledger authors. All rights reserved.
// Licensed under the Apache 2.0 License.
#pragma once

#include "revledger/chain.hpp"
#include "revledger/records.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <unordered_map>
#include <vector>

namespace revledger
{
  /// Seconds since the epoch.
  using Clock = std::function<std::uint64_t()>;

  Clock system_clock();

  struct LedgerOptions
  {
    /// Publish a block once this many seconds have passed (see `tick`).
    std::uint64_t block_interval = 60;
    /// Publish a block after this many accepted events.
    std::uint64_t block_events = 1000;
    /// Directory holding the event log; in-memory only if unset.
    std::optional<std::filesystem::path> data_dir;
    Clock clock = system_clock();
    /// Retain update proofs for auditors. Large benchmarks turn this off.
    bool keep_audit_stream = true;
  };

  /// Thrown when the persisted log does not replay to the roots it recorded.
  class LogCorrupted : public std::runtime_error
  {
  public:
    using std::runtime_error::runtime_error;
  };

  /// The untrusted third party: validates, sequences and stores events in the
  /// prefix tree, signs blocks, PODs and refusals, and feeds auditors.
  ///
  /// Mutations are serialized; queries read immutable block snapshots and
  /// may run concurrently with them.
  class Ledger
  {
  public:
    static constexpr const char* log_file_name = "events.log";

    explicit Ledger(KeyPair key, LedgerOptions options = {});
    ~Ledger();
    Ledger(const Ledger&) = delete;
    Ledger& operator=(const Ledger&) = delete;

    const PublicKey& public_key() const
    {
      return public_key_;
    }

    SubmitResponse submit(const SubmitRequest& request);

    /// Proof against the block at `height`, or the latest block.
    QueryResponse query(
      const Digest& index, std::optional<std::uint64_t> height = std::nullopt) const;

    /// Signed answer; `authorization` is empty if none is stored.
    SignedAuthorization fetch_authorization(const Digest& event_hash) const;

    Block latest_block() const;
    std::optional<Block> block_at(std::uint64_t height) const;

    Block publish_block();
    /// Publishes a block if the interval has elapsed.
    std::optional<Block> tick();

    /// Feed items [cursor, cursor + max), updates optionally in compact form.
    std::vector<AuditItem> audit_items(
      std::size_t cursor, std::size_t max, bool compact_updates = false) const;
    std::size_t audit_size() const;

    ChainDecision internal_check_chain(
      const MemberChain& chain,
      const GroupId& group,
      const Role& role,
      const PublicKey& subject) const;

    SequenceNumber latest_t() const;
    Digest current_root() const;
    /// Working tree, including events not yet in a block.
    PrefixTree current_tree() const;
    /// Accepted events in sequence order.
    std::vector<TimedEvent> history() const;

    /// Inserts without any validation. Models a misbehaving operator; never
    /// reachable through `submit`.
    SequenceNumber append_unvalidated(
      const Event& event, std::optional<StoredAuthorization> authorization);

  private:
    class Log;

    void append_locked(
      const Event& event,
      const Digest& hash,
      std::optional<StoredAuthorization> authorization,
      SequenceNumber t,
      bool persist);
    Block publish_locked();
    Rejection reject(
      RejectReason reason,
      const Digest& hash,
      std::string detail,
      const std::optional<HistoryEntry>& blocking = std::nullopt) const;
    ProofOfDelivery pod_for(const Digest& hash) const;
    std::optional<PublicKey> active_suspender(const GroupId& group) const;
    void replay_log();

    KeyPair key_;
    PublicKey public_key_;
    LedgerOptions options_;

    mutable std::shared_mutex mutex_;
    PrefixTree tree_;
    std::vector<HistoryEntry> history_;
    std::unordered_map<Digest, std::vector<std::size_t>> by_index_;
    std::unordered_map<Digest, StoredAuthorization> authorizations_;
    std::vector<Block> blocks_;
    std::map<std::uint64_t, PrefixTree> snapshots_;
    std::vector<AuditItem> audit_;
    std::size_t events_since_block_ = 0;
    std::unique_ptr<Log> log_;

    friend class LedgerHistory;
  };
}
