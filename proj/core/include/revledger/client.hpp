// Copyright (c) The revledger authors. All rights reserved.
// Licensed under the Apache 2.0 License.
#pragma once

#include "revledger/chain.hpp"
#include "revledger/wire.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace revledger
{
  enum class AlarmKind : std::uint8_t
  {
    no_response = 1,
    invalid_proof = 2,
    unauthorized_revocation_stored = 3,
    wrongful_refusal = 4,
    pod_not_honored = 5,
    fork_detected = 6,
  };

  std::string to_string(AlarmKind k);

  struct RecordedProof
  {
    Digest index;
    Proof proof;
  };

  /// Membership question an alarm was raised for.
  struct MembershipQuery
  {
    MemberChain chain;
    GroupId group;
    Role role = Role::member();
    PublicKey subject;
  };

  /// Signed material backing an alarm. Proofs are against `blocks[0]`.
  struct Evidence
  {
    std::vector<Block> blocks;
    std::vector<RecordedProof> proofs;
    std::vector<SignedAuthorization> authorizations;
    std::optional<ProofOfDelivery> pod;
    std::optional<Rejection> rejection;
    std::optional<SubmitRequest> request;
    std::optional<MembershipQuery> query;
  };

  struct Alarm
  {
    AlarmKind kind = AlarmKind::no_response;
    std::string detail;
    Evidence evidence;
  };

  Bytes encode(const Alarm& a);
  Alarm decode_alarm(ByteView data);

  /// Checks an alarm against `utp` without contacting the ledger. NoResponse
  /// alarms cannot be attributed and never verify.
  bool verify_evidence(const Alarm& alarm, const PublicKey& utp);

  /// Thrown inside verification paths when the ledger misbehaves.
  class MisbehaviorDetected : public std::runtime_error
  {
  public:
    explicit MisbehaviorDetected(Alarm a) :
      std::runtime_error(to_string(a.kind) + ": " + a.detail),
      alarm(std::move(a))
    {}

    Alarm alarm;
  };

  /// History read through verified proofs against one block. Every proof and
  /// authorization is recorded so a failure can be exported as evidence.
  /// Without a ledger it replays recorded evidence only.
  class ProofHistory : public HistorySource
  {
  public:
    ProofHistory(
      LedgerApi* ledger,
      Block block,
      PublicKey utp,
      SignatureCache& cache);

    /// Seeds proofs and authorizations from evidence; they are verified on
    /// first use like live answers.
    void preload(const Evidence& evidence);

    const std::vector<HistoryEntry>& entries(const Digest& index) override;
    std::optional<StoredAuthorization> authorization(
      const Digest& event_hash) override;

    const Block& block() const
    {
      return block_;
    }
    SignatureCache& cache()
    {
      return cache_;
    }

    /// Block, proofs and authorizations used so far.
    Evidence evidence() const;

  private:
    [[noreturn]] void fail(AlarmKind kind, std::string detail, const Digest* index);

    LedgerApi* ledger_;
    Block block_;
    PublicKey utp_;
    SignatureCache& cache_;
    std::map<Digest, Proof> proofs_;
    std::map<Digest, std::vector<HistoryEntry>> entries_;
    std::map<Digest, SignedAuthorization> authorizations_;
  };

  enum class Membership
  {
    is_member,
    not_member,
    alarm,
  };

  struct MemberVerdict
  {
    Membership verdict = Membership::not_member;
    ChainDecision decision;
    std::optional<Alarm> alarm;
  };

  /// Membership decision over any history source: check the chain; on a
  /// revocation, check the revocation's own stored authorization as of its
  /// sequence number. Throws MisbehaviorDetected from the source.
  MemberVerdict decide_membership(
    ProofHistory& source,
    const MemberChain& chain,
    const GroupId& group,
    const Role& role,
    const PublicKey& subject);

  enum class RefusalVerdict
  {
    /// The stated reason holds.
    justified,
    /// The stated reason does not hold at the refusal's sequence number.
    wrongful,
    /// The refusal rests on a revocation stored without valid authorization.
    unauthorized_revocation,
    /// The trusted block does not yet cover the refusal.
    pending,
  };

  std::string to_string(RefusalVerdict v);

  struct RefusalAssessment
  {
    RefusalVerdict verdict = RefusalVerdict::pending;
    std::string detail;
  };

  RefusalAssessment assess_refusal(
    ProofHistory& source, const SubmitRequest& request, const Rejection& rejection);

  struct SubmitOutcome
  {
    SubmitRequest request;
    std::optional<ProofOfDelivery> pod;
    std::optional<Rejection> rejection;
    std::optional<RefusalAssessment> assessment;
    std::optional<Alarm> alarm;

    bool accepted() const
    {
      return pod.has_value();
    }
  };

  struct HierVerdict
  {
    bool valid = false;
    std::string reason;
    std::optional<Alarm> alarm;
  };

  using AlarmSink = std::function<void(const Alarm&)>;

  /// Client procedures. Trusts only the UTP key, signed blocks cross-checked
  /// with an auditor, and proofs against them.
  class AccessClient
  {
  public:
    AccessClient(
      LedgerApi& ledger,
      PublicKey utp,
      AuditorApi* auditor = nullptr,
      AlarmSink sink = {});

    /// Fetches the latest block and cross-checks it. Returns the alarm if one
    /// was raised; the trusted block is kept otherwise unchanged.
    std::optional<Alarm> refresh();
    /// Adopts `block` if it is UTP-signed, e.g. one restored from disk.
    bool trust(const Block& block);
    const std::optional<Block>& trusted_block() const
    {
      return trusted_;
    }
    const PublicKey& utp() const
    {
      return utp_;
    }

    SubmitOutcome add_member(
      const KeyPair& leader,
      const MemberChain& leader_chain,
      const GroupId& group,
      const Role& role,
      const PublicKey& subject);
    SubmitOutcome revoke_member(
      const KeyPair& leader,
      const MemberChain& leader_chain,
      const GroupId& group,
      const Role& role,
      const PublicKey& subject);
    SubmitOutcome suspend(
      const KeyPair& leader, const MemberChain& leader_chain, const GroupId& group);
    SubmitOutcome resume(const KeyPair& leader, const GroupId& group);
    /// Issuer-signed revocation of any certificate by hash.
    SubmitOutcome revoke_cert(const KeyPair& issuer, const Digest& cert_hash);
    /// Leader-signed revocation of a member certificate on behalf of a group.
    SubmitOutcome revoke_cert_for_group(
      const KeyPair& leader,
      const MemberChain& leader_chain,
      const GroupId& group,
      const Digest& cert_hash);
    SubmitOutcome publish_preimage(ByteView preimage);

    /// Submits and, on refusal, judges the stated reason.
    SubmitOutcome submit(SubmitRequest request);

    ChainDecision check_chain(
      const MemberChain& chain,
      const GroupId& group,
      const Role& role,
      const PublicKey& subject);
    MemberVerdict verify_member(
      const MemberChain& chain,
      const GroupId& group,
      const Role& role,
      const PublicKey& subject);
    HierVerdict verify_hier_chain(
      const HierChain& chain, const PublicKey& root, std::uint64_t now);

    /// Re-judges a refusal after a refresh, e.g. one that was pending.
    RefusalAssessment assess(const SubmitRequest& request, const Rejection& rejection);

    /// Checks that every POD whose next block is now trusted was honored.
    std::vector<Alarm> confirm_inclusion();
    std::size_t pending_pods() const
    {
      return pending_.size();
    }

    const std::vector<Alarm>& alarms() const
    {
      return alarms_;
    }

  private:
    SequenceNumber freshness();
    void raise(const Alarm& alarm);
    std::optional<Alarm> check_against_auditor(
      const Block& latest, std::optional<Block>& trusted);

    LedgerApi& ledger_;
    PublicKey utp_;
    AuditorApi* auditor_;
    AlarmSink sink_;
    std::optional<Block> trusted_;
    std::vector<std::pair<SubmitRequest, ProofOfDelivery>> pending_;
    std::vector<Alarm> alarms_;
  };
}
