// Copyright (c) The revledger authors. All rights reserved.
// Licensed under the Apache 2.0 License.
#pragma once

#include "revledger/client.hpp"
#include "revledger/wire.hpp"

#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace revledger
{
  enum class AuditorMode
  {
    /// Mirrors the tree from compact updates.
    full_copy,
    /// Keeps only the last verified root and checks each update proof.
    proof_stream,
  };

  std::string to_string(AuditorMode m);

  enum class MisbehaviorKind : std::uint8_t
  {
    broken_root_chain = 1,
    non_monotonic_timestamp = 2,
    non_append_mutation = 3,
    fork_detected = 4,
    root_mismatch = 5,
    bad_block_signature = 6,
    wrongful_refusal = 7,
  };

  std::string to_string(MisbehaviorKind k);

  struct Misbehavior
  {
    MisbehaviorKind kind = MisbehaviorKind::broken_root_chain;
    std::string detail;
    std::optional<UpdateProof> update;
    std::optional<CompactUpdate> compact_update;
    std::vector<Block> blocks;
    std::optional<Alarm> alarm;
  };

  /// Everything a proof-stream auditor keeps between blocks.
  struct StreamState
  {
    Digest last_root;
    SequenceNumber last_t = 0;
    std::optional<Block> last_block;
  };

  Bytes encode(const StreamState& s);
  StreamState decode_stream_state(ByteView data);

  /// Consumes the ledger's audit feed in order, endorses verified blocks and
  /// records misbehavior. Stops endorsing after the first misbehavior.
  class Auditor : public AuditorApi
  {
  public:
    Auditor(KeyPair key, PublicKey utp, AuditorMode mode);

    /// Verification starts at the block with this hash. Until then, updates
    /// only rebuild the replica (full copy) or are skipped (proof stream).
    void attach(const Digest& trusted_block_hash);

    std::optional<Misbehavior> ingest(const AuditItem& item);
    std::optional<Misbehavior> ingest_update(const UpdateProof& up);
    std::optional<Misbehavior> ingest_compact(const CompactUpdate& u);
    std::optional<Misbehavior> ingest_block(const Block& b);

    /// Pulls and ingests feed items until the ledger has no more. Returns the
    /// number ingested.
    std::size_t sync(LedgerApi& ledger, std::size_t batch = 4096);

    /// Ledger used by `relay_submit`.
    void set_relay(LedgerApi* ledger)
    {
      relay_ = ledger;
    }

    std::vector<Endorsement> endorsed_blocks() override;
    SubmitResponse relay_submit(const SubmitRequest& request) override;

    AuditorMode mode() const
    {
      return mode_;
    }
    const PublicKey& public_key() const
    {
      return public_key_;
    }
    bool halted() const;
    std::vector<Misbehavior> misbehaviors() const;
    std::optional<Block> last_block() const;
    Digest current_root() const;
    /// Proof-stream state as retained between blocks.
    StreamState stream_state() const;
    /// Encoded size of the retained state; the replica for full copy.
    std::size_t state_size() const;

  private:
    std::optional<Misbehavior> flag(Misbehavior m);
    std::optional<Misbehavior> ingest_update_locked(const UpdateProof& up);
    std::optional<Misbehavior> ingest_compact_locked(const CompactUpdate& u);
    std::optional<Misbehavior> ingest_block_locked(const Block& b);

    KeyPair key_;
    PublicKey public_key_;
    PublicKey utp_;
    AuditorMode mode_;
    LedgerApi* relay_ = nullptr;

    mutable std::mutex mutex_;
    std::optional<Digest> awaiting_;
    StreamState state_;
    PrefixTree replica_;
    std::size_t cursor_ = 0;
    bool halted_ = false;
    std::vector<Misbehavior> misbehaviors_;
    /// Published endorsements, kept apart from the verification state.
    std::vector<Endorsement> published_;
  };
}
