// Copyright (c) The revledger authors. All rights reserved.
// Licensed under the Apache 2.0 License.
#pragma once

#include "revledger/records.hpp"

#include <limits>
#include <optional>
#include <vector>

namespace revledger
{
  struct HistoryEntry
  {
    SequenceNumber t = 0;
    Event event;
    Digest hash;
  };

  /// Read access to the ledger's per-index event lists. The ledger reads its
  /// own state; clients back this with verified proofs.
  class HistorySource
  {
  public:
    virtual ~HistorySource() = default;

    /// Events stored at `index` in increasing t.
    virtual const std::vector<HistoryEntry>& entries(const Digest& index) = 0;
    virtual std::optional<StoredAuthorization> authorization(
      const Digest& event_hash) = 0;
  };

  enum class ChainStatus
  {
    success,
    /// Fails the structural checks.
    invalid,
    /// Some certificate has no ledger entry.
    not_registered,
    /// A revocation blocks the chain; see `revocation`.
    revoked,
  };

  std::string to_string(ChainStatus s);

  struct ChainDecision
  {
    ChainStatus status = ChainStatus::success;
    GeneralCheck general;
    /// Chain position of the failing link; chain size for the subject's own
    /// role revocation.
    std::size_t position = 0;
    std::optional<HistoryEntry> revocation;

    bool ok() const
    {
      return status == ChainStatus::success;
    }
  };

  constexpr SequenceNumber end_of_history =
    std::numeric_limits<SequenceNumber>::max();

  /// Decides whether `chain` currently grants `role` in `group` to `subject`,
  /// considering only events with t < `as_of`.
  ///
  /// Each certificate C_i must be registered at time t_i; the issuer's leader
  /// role must not be revoked in (t_{i-1}, t_i], with t_0 = 0; no applicable
  /// certificate revocation may exist at H(C_i); and the subject's role must
  /// not be revoked after t_n. A certificate revocation applies if its issuer
  /// issued the certificate, or if it was authorized on behalf of `group`.
  ChainDecision evaluate_chain(
    HistorySource& source,
    const MemberChain& chain,
    const GroupId& group,
    const Role& role,
    const PublicKey& subject,
    SequenceNumber as_of = end_of_history,
    SignatureCache* cache = nullptr);
}
