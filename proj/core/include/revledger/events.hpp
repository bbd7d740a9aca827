// Copyright (c) The revledger authors. All rights reserved.
// Licensed under the Apache 2.0 License.
#pragma once

#include "revledger/crypto.hpp"

#include <optional>
#include <set>
#include <string>
#include <unordered_set>
#include <variant>
#include <vector>

namespace revledger
{
  /// Ledger-assigned position of an event in the global order. Zero is the
  /// implicit initial event that makes every group owner a leader.
  using SequenceNumber = std::uint64_t;

  /// A group is named in the namespace of its owner key; every (key, name)
  /// pair denotes a group without being created explicitly.
  struct GroupId
  {
    static constexpr std::size_t max_name_size = 256;

    PublicKey owner;
    std::string name;

    GroupId() = default;
    /// Throws std::invalid_argument if the name exceeds 256 bytes.
    GroupId(PublicKey owner_key, std::string group_name);

    auto operator<=>(const GroupId&) const = default;
  };

  class Role
  {
  public:
    /// Throws std::invalid_argument on an empty tag.
    explicit Role(std::string tag);

    static Role leader()
    {
      return Role("leader");
    }
    static Role member()
    {
      return Role("member");
    }

    const std::string& tag() const
    {
      return tag_;
    }
    bool is_leader() const
    {
      return tag_ == "leader";
    }

    auto operator<=>(const Role&) const = default;

  private:
    std::string tag_;
  };

  /// Shared payload of add and revoke events. The freshness stamp is the
  /// latest ledger sequence number the issuer knew when signing.
  struct MemberEvent
  {
    PublicKey issuer;
    PublicKey subject;
    GroupId group;
    Role role = Role::member();
    SequenceNumber freshness = 0;
    Signature sig;

    bool operator==(const MemberEvent&) const = default;
  };

  struct MemberCertificate : MemberEvent
  {
    bool operator==(const MemberCertificate&) const = default;
  };

  struct MemberRevocation : MemberEvent
  {
    bool operator==(const MemberRevocation&) const = default;
  };

  /// Revokes one certificate by its hash; stored at that hash.
  struct CertRevocation
  {
    PublicKey issuer;
    Digest cert_hash;
    SequenceNumber freshness = 0;
    Signature sig;

    bool operator==(const CertRevocation&) const = default;
  };

  /// Revokes every certificate that committed to hash(preimage). Needs no
  /// signature: only the certificate issuer knew the preimage.
  struct PreimageRevocation
  {
    Digest commitment;
    Bytes preimage;

    bool operator==(const PreimageRevocation&) const = default;
  };

  struct GroupLockEvent
  {
    PublicKey issuer;
    GroupId group;
    SequenceNumber freshness = 0;
    Signature sig;

    bool operator==(const GroupLockEvent&) const = default;
  };

  struct SuspendEvent : GroupLockEvent
  {
    bool operator==(const SuspendEvent&) const = default;
  };

  struct ResumeEvent : GroupLockEvent
  {
    bool operator==(const ResumeEvent&) const = default;
  };

  using Event = std::variant<
    MemberCertificate,
    MemberRevocation,
    CertRevocation,
    PreimageRevocation,
    SuspendEvent,
    ResumeEvent>;

  struct TimedEvent
  {
    SequenceNumber t = 0;
    Event event;

    bool operator==(const TimedEvent&) const = default;
  };

  struct Validity
  {
    std::uint64_t not_before = 0;
    std::uint64_t not_after = 0;

    bool operator==(const Validity&) const = default;
  };

  /// Authorization certificate for hierarchical delegation.
  struct HierCertificate
  {
    PublicKey issuer;
    PublicKey subject;
    std::set<std::string> auth;
    std::optional<Validity> validity;
    /// hash(X) for a secret X the issuer can later publish to revoke.
    std::optional<Digest> revocation_commitment;
    Signature sig;

    bool operator==(const HierCertificate&) const = default;
  };

  using MemberChain = std::vector<MemberCertificate>;
  using HierChain = std::vector<HierCertificate>;

  // Canonical encodings. Signing payloads are the same encoding without the
  // trailing signature field.

  Bytes encode(const GroupId& g);
  Bytes encode(const MemberCertificate& c);
  Bytes encode(const MemberRevocation& r);
  Bytes encode(const CertRevocation& r);
  Bytes encode(const PreimageRevocation& r);
  Bytes encode(const SuspendEvent& e);
  Bytes encode(const ResumeEvent& e);
  Bytes encode(const Event& e);
  Bytes encode(const HierCertificate& c);
  Bytes encode(const MemberChain& chain);
  Bytes encode(const HierChain& chain);
  Bytes encode(const TimedEvent& e);

  GroupId decode_group(ByteView data);
  Event decode_event(ByteView data);
  HierCertificate decode_hier_certificate(ByteView data);
  MemberChain decode_member_chain(ByteView data);
  HierChain decode_hier_chain(ByteView data);
  TimedEvent decode_timed_event(ByteView data);

  Bytes signing_payload(const Event& e);
  Bytes signing_payload(const HierCertificate& c);

  // Issuing.

  MemberCertificate issue_certificate(
    const KeyPair& issuer,
    const PublicKey& subject,
    const GroupId& group,
    const Role& role,
    SequenceNumber freshness);
  MemberRevocation issue_revocation(
    const KeyPair& issuer,
    const PublicKey& subject,
    const GroupId& group,
    const Role& role,
    SequenceNumber freshness);
  CertRevocation issue_cert_revocation(
    const KeyPair& issuer, const Digest& cert_hash, SequenceNumber freshness);
  PreimageRevocation reveal_preimage(ByteView preimage);
  SuspendEvent issue_suspend(
    const KeyPair& issuer, const GroupId& group, SequenceNumber freshness);
  ResumeEvent issue_resume(
    const KeyPair& issuer, const GroupId& group, SequenceNumber freshness);
  /// Throws std::invalid_argument if not_before > not_after.
  HierCertificate issue_hier_certificate(
    const KeyPair& issuer,
    const PublicKey& subject,
    std::set<std::string> auth,
    std::optional<Validity> validity = std::nullopt,
    std::optional<Digest> revocation_commitment = std::nullopt);

  // Inspection.

  Digest event_hash(const Event& e);
  Digest certificate_hash(const MemberCertificate& c);
  Digest certificate_hash(const HierCertificate& c);

  /// hash(G, R, PK_U): the shared index of add and revoke events.
  Digest member_index(
    const GroupId& group, const Role& role, const PublicKey& subject);
  /// Group-wide index holding suspend and resume events.
  Digest suspension_index(const GroupId& group);
  Digest index_of(const Event& e);

  /// Signature check, or hash(preimage) == commitment for preimage
  /// revocations.
  bool is_authentic(const Event& e);
  bool is_authentic(const HierCertificate& c);

  std::optional<PublicKey> issuer_of(const Event& e);
  SequenceNumber freshness_of(const Event& e);
  /// "add", "revoke", "revoke-cert", "revoke-preimage", "suspend", "resume".
  std::string action_of(const Event& e);
  const GroupId* group_of(const Event& e);

  /// Memoizes successful authenticity checks by event hash, so one
  /// verification pass never checks the same signature twice.
  class SignatureCache
  {
  public:
    bool authentic(const Event& e);
    bool authentic(const Event& e, const Digest& hash);

  private:
    std::unordered_set<Digest> good_;
  };

  // Local chain validity.

  enum class ChainError
  {
    none,
    broken_link,
    bad_signature,
    wrong_root,
    wrong_role,
    wrong_subject,
    expired,
  };

  std::string to_string(ChainError e);

  struct GeneralCheck
  {
    ChainError error = ChainError::none;
    /// Index of the offending certificate.
    std::size_t position = 0;

    explicit operator bool() const
    {
      return error == ChainError::none;
    }
  };

  /// Structural checks on a membership chain, independent of any ledger
  /// state: linkage and signatures, root = owner, intermediate links delegate
  /// the leader role in `group`, the last link grants `role` to `subject`.
  GeneralCheck general_checks(
    const MemberChain& chain,
    const PublicKey& root,
    const PublicKey& subject,
    const GroupId& group,
    const Role& role,
    SignatureCache* cache = nullptr);

  /// Linkage, signatures, root, subject and validity windows against `now`
  /// (seconds since the epoch).
  GeneralCheck general_checks(
    const HierChain& chain,
    const PublicKey& root,
    const PublicKey& subject,
    std::uint64_t now);

  std::set<std::string> auth_intersection(const HierChain& chain);
}
