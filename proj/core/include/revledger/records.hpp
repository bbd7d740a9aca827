// Copyright (c) The revledger authors. All rights reserved.
// Licensed under the Apache 2.0 License.
#pragma once

#include "revledger/events.hpp"
#include "revledger/prefix_tree.hpp"

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace revledger
{
  /// Signed checkpoint chaining the tree root to the previous block.
  struct Block
  {
    std::uint64_t height = 0;
    Digest prev;
    Digest root;
    SequenceNumber t_latest = 0;
    std::uint64_t t_utc = 0;
    /// Signature over the height and block hash.
    Signature sig;

    /// H(prev || root || t_latest || t_utc).
    Digest hash() const;

    bool operator==(const Block&) const = default;
  };

  Block make_block(
    const KeyPair& utp,
    std::uint64_t height,
    const Digest& prev,
    const Digest& root,
    SequenceNumber t_latest,
    std::uint64_t t_utc);
  bool verify_block(const Block& b, const PublicKey& utp);

  /// The ledger's signed promise, issued before writing, that the event will
  /// appear in the next block.
  struct ProofOfDelivery
  {
    Digest event_hash;
    std::uint64_t block_height = 0;
    Digest block_hash;
    SequenceNumber t_latest = 0;
    std::uint64_t t_utc = 0;
    Signature sig;

    bool operator==(const ProofOfDelivery&) const = default;
  };

  bool verify_pod(const ProofOfDelivery& pod, const PublicKey& utp);

  /// Authorization kept beside the tree for revocations. `scope` names the
  /// group for leader-issued certificate revocations.
  struct StoredAuthorization
  {
    std::optional<GroupId> scope;
    MemberChain chain;

    bool operator==(const StoredAuthorization&) const = default;
  };

  /// FETCH_AUTH answer. Signed so that a missing authorization for a stored
  /// revocation is attributable to the ledger.
  struct SignedAuthorization
  {
    Digest event_hash;
    std::optional<StoredAuthorization> authorization;
    Signature sig;

    bool operator==(const SignedAuthorization&) const = default;
  };

  SignedAuthorization sign_authorization(
    const KeyPair& utp,
    const Digest& event_hash,
    std::optional<StoredAuthorization> authorization);
  bool verify_authorization(const SignedAuthorization& a, const PublicKey& utp);

  struct SubmitRequest
  {
    Event event;
    /// Chain authorizing the issuer as a leader; empty for the group owner.
    MemberChain chain;
    /// Group on whose behalf a certificate revocation is issued. Absent for
    /// issuer-signed revocations, which need no chain.
    std::optional<GroupId> scope;

    bool operator==(const SubmitRequest&) const = default;
  };

  enum class RejectReason : std::uint8_t
  {
    stale_freshness = 1,
    unauthorized = 2,
    group_suspended = 3,
    bad_signature = 4,
    bad_preimage = 5,
    duplicate_event = 6,
    malformed = 7,
  };

  std::string to_string(RejectReason r);

  struct Rejection
  {
    RejectReason reason = RejectReason::malformed;
    Digest event_hash;
    std::string detail;
    /// Latest sequence number when the refusal was made.
    SequenceNumber t_latest = 0;
    /// For unauthorized submissions, the revocation that blocks the chain.
    std::optional<TimedEvent> blocking;
    std::optional<StoredAuthorization> blocking_authorization;
    Signature sig;

    bool operator==(const Rejection&) const = default;
  };

  bool verify_rejection(const Rejection& r, const PublicKey& utp);

  using SubmitResponse = std::variant<ProofOfDelivery, Rejection>;

  struct QueryResponse
  {
    Proof proof;
    Block block;
  };

  /// Full-copy auditor message: what the auditor needs to replay one insert.
  struct CompactUpdate
  {
    Digest index;
    SequenceNumber t = 0;
    Digest event_hash;

    bool operator==(const CompactUpdate&) const = default;
  };

  /// Item of the auditor feed: every update in acceptance order, with each
  /// block at its production point. Full-copy auditors receive updates in
  /// compact form.
  using AuditItem = std::variant<UpdateProof, Block, CompactUpdate>;

  CompactUpdate compact(const UpdateProof& up);

  Bytes encode(const Block& b);
  Bytes encode(const ProofOfDelivery& p);
  Bytes encode(const StoredAuthorization& a);
  Bytes encode(const SignedAuthorization& a);
  Bytes encode(const SubmitRequest& r);
  Bytes encode(const Rejection& r);
  Bytes encode(const SubmitResponse& r);
  Bytes encode(const QueryResponse& r);
  Bytes encode(const AuditItem& item);
  Bytes encode(const CompactUpdate& u);

  Block decode_block(ByteView data);
  ProofOfDelivery decode_pod(ByteView data);
  StoredAuthorization decode_authorization(ByteView data);
  SignedAuthorization decode_signed_authorization(ByteView data);
  SubmitRequest decode_submit_request(ByteView data);
  Rejection decode_rejection(ByteView data);
  SubmitResponse decode_submit_response(ByteView data);
  QueryResponse decode_query_response(ByteView data);
  AuditItem decode_audit_item(ByteView data);
  CompactUpdate decode_compact_update(ByteView data);

  // Payloads covered by the ledger's signatures.
  Bytes block_signing_payload(const Block& b);
  Bytes signing_payload(const ProofOfDelivery& p);
  Bytes signing_payload(const Rejection& r);
  Bytes signing_payload(const SignedAuthorization& a);
}
