// Copyright (c) The revledger authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "revledger/client.hpp"

#include "revledger/encoding.hpp"

namespace revledger
{
  std::string to_string(AlarmKind k)
  {
    switch (k)
    {
      case AlarmKind::no_response:
        return "NoResponse";
      case AlarmKind::invalid_proof:
        return "InvalidProof";
      case AlarmKind::unauthorized_revocation_stored:
        return "UnauthorizedRevocationStored";
      case AlarmKind::wrongful_refusal:
        return "WrongfulRefusal";
      case AlarmKind::pod_not_honored:
        return "PodNotHonored";
      case AlarmKind::fork_detected:
        return "ForkDetected";
    }
    return "Unknown";
  }

  std::string to_string(RefusalVerdict v)
  {
    switch (v)
    {
      case RefusalVerdict::justified:
        return "justified";
      case RefusalVerdict::wrongful:
        return "wrongful";
      case RefusalVerdict::unauthorized_revocation:
        return "unauthorized-revocation";
      case RefusalVerdict::pending:
        return "pending";
    }
    return "unknown";
  }

  // Alarm encoding.

  namespace
  {
    Bytes encode(const RecordedProof& p)
    {
      return Encoder(TypeTag::query).field(p.index).field(encode(p.proof)).take();
    }

    RecordedProof decode_recorded_proof(ByteView data)
    {
      Decoder d(data, TypeTag::query);
      RecordedProof p;
      p.index = d.digest_field();
      p.proof = decode_proof(d.field());
      d.finish();
      return p;
    }

    template <typename T>
    Bytes encode_all(const std::vector<T>& items)
    {
      std::vector<Bytes> out;
      for (const auto& i : items)
      {
        out.push_back(encode(i));
      }
      return encode_list(out);
    }

    template <typename T, typename F>
    std::vector<T> decode_all(ByteView data, F decode_one)
    {
      std::vector<T> out;
      for (const auto& item : decode_list(data))
      {
        out.push_back(decode_one(item));
      }
      return out;
    }
  }

  Bytes encode(const Alarm& a)
  {
    const auto& ev = a.evidence;
    Encoder e(TypeTag::alarm);
    e.u64(static_cast<std::uint64_t>(a.kind))
      .field(a.detail)
      .field(encode_all(ev.blocks))
      .field(encode_all(ev.proofs))
      .field(encode_all(ev.authorizations));
    e.flag(ev.pod.has_value());
    if (ev.pod)
    {
      e.field(encode(*ev.pod));
    }
    e.flag(ev.rejection.has_value());
    if (ev.rejection)
    {
      e.field(encode(*ev.rejection));
    }
    e.flag(ev.request.has_value());
    if (ev.request)
    {
      e.field(encode(*ev.request));
    }
    e.flag(ev.query.has_value());
    if (ev.query)
    {
      e.field(encode(ev.query->chain))
        .field(encode(ev.query->group))
        .field(ev.query->role.tag())
        .field(ev.query->subject);
    }
    return e.take();
  }

  Alarm decode_alarm(ByteView data)
  {
    Decoder d(data, TypeTag::alarm);
    Alarm a;
    const auto kind = d.u64();
    if (kind < 1 || kind > 6)
    {
      throw DecodeError("unknown alarm kind");
    }
    a.kind = static_cast<AlarmKind>(kind);
    a.detail = d.string_field();
    auto& ev = a.evidence;
    ev.blocks = decode_all<Block>(d.field(), decode_block);
    ev.proofs = decode_all<RecordedProof>(d.field(), decode_recorded_proof);
    ev.authorizations =
      decode_all<SignedAuthorization>(d.field(), decode_signed_authorization);
    if (d.flag())
    {
      ev.pod = decode_pod(d.field());
    }
    if (d.flag())
    {
      ev.rejection = decode_rejection(d.field());
    }
    if (d.flag())
    {
      ev.request = decode_submit_request(d.field());
    }
    if (d.flag())
    {
      MembershipQuery q;
      q.chain = decode_member_chain(d.field());
      q.group = decode_group(d.field());
      q.role = Role(d.string_field());
      q.subject = d.key_field();
      ev.query = std::move(q);
    }
    d.finish();
    return a;
  }

  namespace
  {
    /// Why a proof does not establish the event list at `index`, if it doesn't.
    std::optional<std::string> proof_problem(
      const Digest& index,
      const Proof& proof,
      const Digest& root,
      SignatureCache& cache,
      std::vector<HistoryEntry>* out)
    {
      if (!verify_proof(index, proof, root))
      {
        return "proof does not verify against the block root";
      }
      if (!proof.is_presence())
      {
        return std::nullopt;
      }
      for (const auto& e : proof.entries)
      {
        if (e.body.empty())
        {
          return "presence proof without event bodies";
        }
        Event event;
        try
        {
          event = decode_event(e.body);
        }
        catch (const std::exception&)
        {
          return "stored entry is not an event";
        }
        if (index_of(event) != index)
        {
          return "stored event belongs to another index";
        }
        if (!cache.authentic(event, e.event_hash))
        {
          return "stored event is not authentic";
        }
        if (out != nullptr)
        {
          out->push_back({e.t, std::move(event), e.event_hash});
        }
      }
      return std::nullopt;
    }

    /// Issuer of the last suspend at `group` before `as_of`, unless resumed.
    std::optional<PublicKey> suspender_before(
      HistorySource& source, const GroupId& group, SequenceNumber as_of)
    {
      std::optional<PublicKey> suspender;
      for (const auto& e : source.entries(suspension_index(group)))
      {
        if (e.t >= as_of)
        {
          break;
        }
        if (const auto* s = std::get_if<SuspendEvent>(&e.event))
        {
          suspender = s->issuer;
        }
        else
        {
          suspender.reset();
        }
      }
      return suspender;
    }

    const GroupId* group_for(const SubmitRequest& r)
    {
      if (std::holds_alternative<CertRevocation>(r.event))
      {
        return r.scope ? &*r.scope : nullptr;
      }
      return group_of(r.event);
    }

    /// Why a stored revocation lacks valid authorization, if it does.
    std::optional<std::string> revocation_problem(
      ProofHistory& source, const HistoryEntry& rev)
    {
      auto auth = source.authorization(rev.hash);
      if (!auth)
      {
        return "no authorization stored for the revocation at t=" +
          std::to_string(rev.t);
      }
      const GroupId* group = nullptr;
      PublicKey issuer;
      if (const auto* m = std::get_if<MemberRevocation>(&rev.event))
      {
        group = &m->group;
        issuer = m->issuer;
      }
      else if (const auto* c = std::get_if<CertRevocation>(&rev.event))
      {
        group = auth->scope ? &*auth->scope : nullptr;
        issuer = c->issuer;
      }
      if (group == nullptr)
      {
        return "revocation at t=" + std::to_string(rev.t) + " has no group scope";
      }
      auto suspender = suspender_before(source, *group, rev.t);
      if (suspender && *suspender != issuer)
      {
        return "revocation at t=" + std::to_string(rev.t) +
          " was stored while another key held the suspension";
      }
      auto d = evaluate_chain(
        source, auth->chain, *group, Role::leader(), issuer, rev.t, &source.cache());
      if (!d.ok())
      {
        return "authorizing chain of the revocation at t=" +
          std::to_string(rev.t) + " fails: " + to_string(d.status);
      }
      return std::nullopt;
    }

    /// A certificate revocation signed by the certificate's own issuer needs
    /// no stored authorization.
    bool self_authorized(const ChainDecision& d, const MemberChain& chain)
    {
      const auto* c = std::get_if<CertRevocation>(&d.revocation->event);
      return c != nullptr && d.position < chain.size() &&
        c->issuer == chain[d.position].issuer;
    }

    Evidence with(Evidence e, const Rejection& r, const SubmitRequest& req)
    {
      e.rejection = r;
      e.request = req;
      return e;
    }
  }

  // ProofHistory.

  ProofHistory::ProofHistory(
    LedgerApi* ledger, Block block, PublicKey utp, SignatureCache& cache) :
    ledger_(ledger),
    block_(std::move(block)),
    utp_(std::move(utp)),
    cache_(cache)
  {}

  void ProofHistory::preload(const Evidence& evidence)
  {
    for (const auto& p : evidence.proofs)
    {
      proofs_.emplace(p.index, p.proof);
    }
    for (const auto& a : evidence.authorizations)
    {
      authorizations_.emplace(a.event_hash, a);
    }
  }

  void ProofHistory::fail(AlarmKind kind, std::string detail, const Digest* index)
  {
    Alarm a;
    a.kind = kind;
    a.detail = std::move(detail);
    if (index != nullptr)
    {
      // Only the offending proof.
      a.evidence.blocks = {block_};
      a.evidence.proofs = {{*index, proofs_.at(*index)}};
    }
    else
    {
      a.evidence = evidence();
    }
    throw MisbehaviorDetected(std::move(a));
  }

  const std::vector<HistoryEntry>& ProofHistory::entries(const Digest& index)
  {
    if (auto it = entries_.find(index); it != entries_.end())
    {
      return it->second;
    }
    if (proofs_.find(index) == proofs_.end())
    {
      if (ledger_ == nullptr)
      {
        throw std::runtime_error("evidence lacks a proof for " + index.hex());
      }
      QueryResponse r;
      try
      {
        r = ledger_->query(index, block_.height);
      }
      catch (const std::exception& e)
      {
        fail(AlarmKind::no_response, std::string("query failed: ") + e.what(), nullptr);
      }
      if (r.block.hash() != block_.hash())
      {
        if (r.block.height == block_.height && verify_block(r.block, utp_))
        {
          Alarm a{AlarmKind::fork_detected, "query answered from a conflicting block", {}};
          a.evidence.blocks = {block_, r.block};
          throw MisbehaviorDetected(std::move(a));
        }
        fail(AlarmKind::no_response, "query answered against another block", nullptr);
      }
      proofs_.emplace(index, std::move(r.proof));
    }
    std::vector<HistoryEntry> out;
    if (auto problem = proof_problem(index, proofs_.at(index), block_.root, cache_, &out))
    {
      fail(AlarmKind::invalid_proof, *problem, &index);
    }
    return entries_.emplace(index, std::move(out)).first->second;
  }

  std::optional<StoredAuthorization> ProofHistory::authorization(
    const Digest& event_hash)
  {
    auto it = authorizations_.find(event_hash);
    if (it == authorizations_.end())
    {
      if (ledger_ == nullptr)
      {
        throw std::runtime_error("evidence lacks an authorization answer");
      }
      SignedAuthorization a;
      try
      {
        a = ledger_->fetch_authorization(event_hash);
      }
      catch (const std::exception& e)
      {
        fail(AlarmKind::no_response, std::string("fetch failed: ") + e.what(), nullptr);
      }
      it = authorizations_.emplace(event_hash, std::move(a)).first;
    }
    const auto& a = it->second;
    if (a.event_hash != event_hash || !verify_authorization(a, utp_))
    {
      authorizations_.erase(it);
      fail(AlarmKind::no_response, "authorization answer is not signed by the ledger", nullptr);
    }
    return a.authorization;
  }

  Evidence ProofHistory::evidence() const
  {
    Evidence e;
    e.blocks = {block_};
    for (const auto& [index, proof] : proofs_)
    {
      e.proofs.push_back({index, proof});
    }
    for (const auto& [hash, auth] : authorizations_)
    {
      e.authorizations.push_back(auth);
    }
    return e;
  }

  // Decisions.

  MemberVerdict decide_membership(
    ProofHistory& source,
    const MemberChain& chain,
    const GroupId& group,
    const Role& role,
    const PublicKey& subject)
  {
    MemberVerdict v;
    v.decision = evaluate_chain(
      source, chain, group, role, subject, end_of_history, &source.cache());
    switch (v.decision.status)
    {
      case ChainStatus::success:
        v.verdict = Membership::is_member;
        return v;
      case ChainStatus::invalid:
      case ChainStatus::not_registered:
        v.verdict = Membership::not_member;
        return v;
      case ChainStatus::revoked:
        break;
    }
    if (self_authorized(v.decision, chain))
    {
      v.verdict = Membership::not_member;
      return v;
    }
    if (auto problem = revocation_problem(source, *v.decision.revocation))
    {
      Alarm a;
      a.kind = AlarmKind::unauthorized_revocation_stored;
      a.detail = *problem;
      a.evidence = source.evidence();
      a.evidence.query = MembershipQuery{chain, group, role, subject};
      v.verdict = Membership::alarm;
      v.alarm = std::move(a);
      return v;
    }
    v.verdict = Membership::not_member;
    return v;
  }

  RefusalAssessment assess_refusal(
    ProofHistory& source, const SubmitRequest& request, const Rejection& rejection)
  {
    const auto& event = request.event;
    const auto c = rejection.t_latest;
    if (source.block().t_latest < c)
    {
      return {RefusalVerdict::pending, "trusted block predates the refusal"};
    }
    if (event_hash(event) != rejection.event_hash)
    {
      return {RefusalVerdict::wrongful, "refusal names another event"};
    }
    auto up_to_c = [&](const Digest& index) {
      std::vector<HistoryEntry> out;
      for (const auto& e : source.entries(index))
      {
        if (e.t <= c)
        {
          out.push_back(e);
        }
      }
      return out;
    };
    auto verdict = [](bool holds, std::string why) {
      return RefusalAssessment{
        holds ? RefusalVerdict::justified : RefusalVerdict::wrongful,
        std::move(why)};
    };
    const auto issuer = issuer_of(event);
    const GroupId* group = group_for(request);

    switch (rejection.reason)
    {
      case RejectReason::bad_signature:
      case RejectReason::bad_preimage:
        return verdict(!is_authentic(event), "event authenticity");
      case RejectReason::duplicate_event:
      {
        const auto h = event_hash(event);
        bool found = false;
        for (const auto& e : up_to_c(index_of(event)))
        {
          found = found || e.hash == h;
        }
        return verdict(found, "event already stored");
      }
      case RejectReason::stale_freshness:
      {
        if (std::holds_alternative<PreimageRevocation>(event))
        {
          return verdict(false, "preimage revocations carry no freshness");
        }
        bool newer = false;
        for (const auto& e : up_to_c(index_of(event)))
        {
          newer = newer || e.t > freshness_of(event);
        }
        return verdict(newer, "a newer event exists at the index");
      }
      case RejectReason::group_suspended:
      {
        if (group == nullptr)
        {
          return verdict(false, "event names no group");
        }
        auto sus = suspender_before(source, *group, c + 1);
        if (!sus)
        {
          return verdict(false, "no suspension was active");
        }
        return verdict(
          std::holds_alternative<SuspendEvent>(event) || *sus != *issuer,
          "suspension held by another key");
      }
      case RejectReason::unauthorized:
      {
        if (std::holds_alternative<ResumeEvent>(event))
        {
          auto sus = suspender_before(source, *group, c + 1);
          return verdict(!sus || *sus != *issuer, "only the suspender may resume");
        }
        if (group == nullptr)
        {
          return verdict(false, "event needs no group authorization");
        }
        auto d = evaluate_chain(
          source, request.chain, *group, Role::leader(), *issuer, c + 1, &source.cache());
        if (d.ok())
        {
          return verdict(false, "issuer chain is valid");
        }
        if (d.status == ChainStatus::revoked && !self_authorized(d, request.chain))
        {
          if (auto problem = revocation_problem(source, *d.revocation))
          {
            return {RefusalVerdict::unauthorized_revocation, *problem};
          }
        }
        return verdict(true, "issuer chain: " + to_string(d.status));
      }
      case RejectReason::malformed:
        return verdict(false, "request is well formed");
    }
    return verdict(false, "unknown reason");
  }

  // Evidence verification.

  namespace
  {
    bool verify_evidence_unchecked(const Alarm& alarm, const PublicKey& utp)
    {
      const auto& ev = alarm.evidence;
      if (ev.blocks.empty())
      {
        return false;
      }
      for (const auto& b : ev.blocks)
      {
        if (!verify_block(b, utp))
        {
          return false;
        }
      }
      const auto& block = ev.blocks[0];
      SignatureCache cache;

      switch (alarm.kind)
      {
        case AlarmKind::no_response:
          return false;
        case AlarmKind::fork_detected:
          return ev.blocks.size() >= 2 && ev.blocks[1].height == block.height &&
            ev.blocks[1].hash() != block.hash();
        case AlarmKind::invalid_proof:
          return ev.proofs.size() == 1 &&
            proof_problem(ev.proofs[0].index, ev.proofs[0].proof, block.root, cache, nullptr)
              .has_value();
        case AlarmKind::pod_not_honored:
        {
          if (!ev.pod || !ev.request || !verify_pod(*ev.pod, utp))
          {
            return false;
          }
          if (
            event_hash(ev.request->event) != ev.pod->event_hash ||
            block.height != ev.pod->block_height + 1)
          {
            return false;
          }
          ProofHistory source(nullptr, block, utp, cache);
          source.preload(ev);
          for (const auto& e : source.entries(index_of(ev.request->event)))
          {
            if (e.hash == ev.pod->event_hash)
            {
              return false;
            }
          }
          return true;
        }
        case AlarmKind::unauthorized_revocation_stored:
        {
          ProofHistory source(nullptr, block, utp, cache);
          source.preload(ev);
          if (ev.query)
          {
            const auto& q = *ev.query;
            return decide_membership(source, q.chain, q.group, q.role, q.subject)
                     .verdict == Membership::alarm;
          }
          if (ev.rejection && ev.request && verify_rejection(*ev.rejection, utp))
          {
            return assess_refusal(source, *ev.request, *ev.rejection).verdict ==
              RefusalVerdict::unauthorized_revocation;
          }
          return false;
        }
        case AlarmKind::wrongful_refusal:
        {
          if (!ev.rejection || !ev.request || !verify_rejection(*ev.rejection, utp))
          {
            return false;
          }
          if (event_hash(ev.request->event) != ev.rejection->event_hash)
          {
            return false;
          }
          ProofHistory source(nullptr, block, utp, cache);
          source.preload(ev);
          return assess_refusal(source, *ev.request, *ev.rejection).verdict ==
            RefusalVerdict::wrongful;
        }
      }
      return false;
    }
  }

  bool verify_evidence(const Alarm& alarm, const PublicKey& utp)
  {
    try
    {
      return verify_evidence_unchecked(alarm, utp);
    }
    catch (const std::exception&)
    {
      // Incomplete or inconsistent evidence.
      return false;
    }
  }

  // AccessClient.

  AccessClient::AccessClient(
    LedgerApi& ledger, PublicKey utp, AuditorApi* auditor, AlarmSink sink) :
    ledger_(ledger),
    utp_(std::move(utp)),
    auditor_(auditor),
    sink_(std::move(sink))
  {}

  void AccessClient::raise(const Alarm& alarm)
  {
    alarms_.push_back(alarm);
    if (sink_)
    {
      sink_(alarm);
    }
  }

  bool AccessClient::trust(const Block& block)
  {
    if (!verify_block(block, utp_))
    {
      return false;
    }
    trusted_ = block;
    return true;
  }

  std::optional<Alarm> AccessClient::check_against_auditor(
    const Block& latest, std::optional<Block>& trusted)
  {
    std::vector<Endorsement> endorsements;
    try
    {
      endorsements = auditor_->endorsed_blocks();
    }
    catch (const std::exception&)
    {
      // Unreachable auditor: nothing new can be cross-checked.
      return std::nullopt;
    }
    const Endorsement* best = nullptr;
    for (const auto& e : endorsements)
    {
      if (
        verify_endorsement(e) && verify_block(e.block, utp_) &&
        (best == nullptr || e.block.height > best->block.height))
      {
        best = &e;
      }
    }
    if (best == nullptr)
    {
      return std::nullopt;
    }
    std::optional<Block> ours = latest;
    if (best->block.height != latest.height)
    {
      try
      {
        ours = ledger_.block_at(best->block.height);
      }
      catch (const std::exception&)
      {
        ours.reset();
      }
      if (!ours || !verify_block(*ours, utp_))
      {
        return Alarm{
          AlarmKind::no_response,
          "ledger withholds the endorsed block at height " +
            std::to_string(best->block.height),
          {}};
      }
    }
    if (ours->hash() != best->block.hash())
    {
      Alarm a{AlarmKind::fork_detected, "ledger block differs from the auditor's", {}};
      a.evidence.blocks = {*ours, best->block};
      return a;
    }
    trusted = *ours;
    return std::nullopt;
  }

  std::optional<Alarm> AccessClient::refresh()
  {
    Block latest;
    try
    {
      latest = ledger_.latest_block();
    }
    catch (const std::exception& e)
    {
      Alarm a{AlarmKind::no_response, std::string("latest block: ") + e.what(), {}};
      raise(a);
      return a;
    }
    if (!verify_block(latest, utp_))
    {
      Alarm a{AlarmKind::no_response, "latest block is not signed by the ledger", {}};
      raise(a);
      return a;
    }
    if (trusted_ && latest.height == trusted_->height && latest.hash() != trusted_->hash())
    {
      Alarm a{AlarmKind::fork_detected, "two blocks at the same height", {}};
      a.evidence.blocks = {*trusted_, latest};
      raise(a);
      return a;
    }
    std::optional<Block> next;
    if (auditor_ != nullptr)
    {
      if (auto alarm = check_against_auditor(latest, next))
      {
        raise(*alarm);
        return alarm;
      }
    }
    else
    {
      next = latest;
    }
    if (next && (!trusted_ || next->height >= trusted_->height))
    {
      if (trusted_ && next->height == trusted_->height && next->hash() != trusted_->hash())
      {
        Alarm a{AlarmKind::fork_detected, "two blocks at the same height", {}};
        a.evidence.blocks = {*trusted_, *next};
        raise(a);
        return a;
      }
      trusted_ = next;
    }
    return std::nullopt;
  }

  SequenceNumber AccessClient::freshness()
  {
    if (!trusted_)
    {
      refresh();
    }
    return trusted_ ? trusted_->t_latest : 0;
  }

  SubmitOutcome AccessClient::add_member(
    const KeyPair& leader,
    const MemberChain& leader_chain,
    const GroupId& group,
    const Role& role,
    const PublicKey& subject)
  {
    return submit(
      {issue_certificate(leader, subject, group, role, freshness()), leader_chain, {}});
  }

  SubmitOutcome AccessClient::revoke_member(
    const KeyPair& leader,
    const MemberChain& leader_chain,
    const GroupId& group,
    const Role& role,
    const PublicKey& subject)
  {
    return submit(
      {issue_revocation(leader, subject, group, role, freshness()), leader_chain, {}});
  }

  SubmitOutcome AccessClient::suspend(
    const KeyPair& leader, const MemberChain& leader_chain, const GroupId& group)
  {
    return submit({issue_suspend(leader, group, freshness()), leader_chain, {}});
  }

  SubmitOutcome AccessClient::resume(const KeyPair& leader, const GroupId& group)
  {
    return submit({issue_resume(leader, group, freshness()), {}, {}});
  }

  SubmitOutcome AccessClient::revoke_cert(const KeyPair& issuer, const Digest& cert_hash)
  {
    return submit({issue_cert_revocation(issuer, cert_hash, freshness()), {}, {}});
  }

  SubmitOutcome AccessClient::revoke_cert_for_group(
    const KeyPair& leader,
    const MemberChain& leader_chain,
    const GroupId& group,
    const Digest& cert_hash)
  {
    return submit(
      {issue_cert_revocation(leader, cert_hash, freshness()), leader_chain, group});
  }

  SubmitOutcome AccessClient::publish_preimage(ByteView preimage)
  {
    return submit({reveal_preimage(preimage), {}, {}});
  }

  SubmitOutcome AccessClient::submit(SubmitRequest request)
  {
    SubmitOutcome out;
    out.request = std::move(request);
    const auto& req = out.request;
    const auto h = event_hash(req.event);

    SubmitResponse response;
    try
    {
      response = ledger_.submit(req);
    }
    catch (const std::exception& e)
    {
      Alarm a{AlarmKind::no_response, std::string("submit: ") + e.what(), {}};
      a.evidence.request = req;
      if (auditor_ != nullptr)
      {
        try
        {
          response = auditor_->relay_submit(req);
        }
        catch (const std::exception&)
        {
          out.alarm = a;
          raise(a);
          return out;
        }
      }
      else
      {
        out.alarm = a;
        raise(a);
        return out;
      }
    }

    if (const auto* pod = std::get_if<ProofOfDelivery>(&response))
    {
      if (pod->event_hash != h || !verify_pod(*pod, utp_))
      {
        Alarm a{AlarmKind::no_response, "proof of delivery does not verify", {}};
        a.evidence.request = req;
        out.alarm = a;
        raise(a);
        return out;
      }
      out.pod = *pod;
      pending_.emplace_back(req, *pod);
      return out;
    }

    const auto& rejection = std::get<Rejection>(response);
    if (rejection.event_hash != h || !verify_rejection(rejection, utp_))
    {
      Alarm a{AlarmKind::no_response, "refusal does not verify", {}};
      a.evidence.request = req;
      out.alarm = a;
      raise(a);
      return out;
    }
    out.rejection = rejection;
    const auto alarms_before = alarms_.size();
    out.assessment = assess(req, rejection);
    if (out.assessment->verdict == RefusalVerdict::wrongful && auditor_ != nullptr)
    {
      try
      {
        auto relayed = auditor_->relay_submit(req);
        if (const auto* pod = std::get_if<ProofOfDelivery>(&relayed))
        {
          if (pod->event_hash == h && verify_pod(*pod, utp_))
          {
            out.pod = *pod;
            pending_.emplace_back(req, *pod);
          }
        }
      }
      catch (const std::exception&)
      {
        // The alarm below stands either way.
      }
    }
    if (alarms_.size() > alarms_before)
    {
      out.alarm = alarms_.back();
    }
    return out;
  }

  RefusalAssessment AccessClient::assess(
    const SubmitRequest& request, const Rejection& rejection)
  {
    if (!trusted_ || trusted_->t_latest < rejection.t_latest)
    {
      refresh();
    }
    if (!trusted_)
    {
      return {RefusalVerdict::pending, "no trusted block"};
    }
    SignatureCache cache;
    ProofHistory source(&ledger_, *trusted_, utp_, cache);
    try
    {
      auto a = assess_refusal(source, request, rejection);
      if (a.verdict == RefusalVerdict::wrongful)
      {
        raise({AlarmKind::wrongful_refusal, a.detail, with(source.evidence(), rejection, request)});
      }
      else if (a.verdict == RefusalVerdict::unauthorized_revocation)
      {
        raise(
          {AlarmKind::unauthorized_revocation_stored,
           a.detail,
           with(source.evidence(), rejection, request)});
      }
      return a;
    }
    catch (const MisbehaviorDetected& m)
    {
      raise(m.alarm);
      return {RefusalVerdict::pending, m.what()};
    }
  }

  ChainDecision AccessClient::check_chain(
    const MemberChain& chain,
    const GroupId& group,
    const Role& role,
    const PublicKey& subject)
  {
    ChainDecision d;
    d.status = ChainStatus::invalid;
    if (!trusted_ && refresh())
    {
      return d;
    }
    if (!trusted_)
    {
      return d;
    }
    SignatureCache cache;
    ProofHistory source(&ledger_, *trusted_, utp_, cache);
    try
    {
      return evaluate_chain(source, chain, group, role, subject, end_of_history, &cache);
    }
    catch (const MisbehaviorDetected& m)
    {
      raise(m.alarm);
      return d;
    }
  }

  MemberVerdict AccessClient::verify_member(
    const MemberChain& chain,
    const GroupId& group,
    const Role& role,
    const PublicKey& subject)
  {
    MemberVerdict v;
    v.verdict = Membership::alarm;
    if (!trusted_ && refresh())
    {
      v.alarm = alarms_.back();
      return v;
    }
    if (!trusted_)
    {
      v.alarm = Alarm{AlarmKind::no_response, "no trusted block", {}};
      raise(*v.alarm);
      return v;
    }
    SignatureCache cache;
    ProofHistory source(&ledger_, *trusted_, utp_, cache);
    try
    {
      v = decide_membership(source, chain, group, role, subject);
    }
    catch (const MisbehaviorDetected& m)
    {
      v.verdict = Membership::alarm;
      v.alarm = m.alarm;
    }
    if (v.alarm)
    {
      raise(*v.alarm);
    }
    return v;
  }

  HierVerdict AccessClient::verify_hier_chain(
    const HierChain& chain, const PublicKey& root, std::uint64_t now)
  {
    HierVerdict v;
    if (chain.empty())
    {
      v.reason = "empty chain";
      return v;
    }
    auto g = general_checks(chain, root, chain.back().subject, now);
    if (!g)
    {
      v.reason = to_string(g.error) + " at position " + std::to_string(g.position);
      return v;
    }
    if (!trusted_)
    {
      refresh();
    }
    if (!trusted_)
    {
      v.reason = "no trusted block";
      return v;
    }
    SignatureCache cache;
    ProofHistory source(&ledger_, *trusted_, utp_, cache);
    try
    {
      for (std::size_t i = 0; i < chain.size(); ++i)
      {
        const auto& c = chain[i];
        for (const auto& e : source.entries(certificate_hash(c)))
        {
          const auto* r = std::get_if<CertRevocation>(&e.event);
          if (r != nullptr && r->issuer == c.issuer)
          {
            v.reason = "certificate " + std::to_string(i) + " revoked by its issuer";
            return v;
          }
        }
        if (c.revocation_commitment)
        {
          for (const auto& e : source.entries(*c.revocation_commitment))
          {
            if (std::holds_alternative<PreimageRevocation>(e.event))
            {
              v.reason = "certificate " + std::to_string(i) + " revoked by preimage";
              return v;
            }
          }
        }
      }
    }
    catch (const MisbehaviorDetected& m)
    {
      v.reason = m.what();
      v.alarm = m.alarm;
      raise(m.alarm);
      return v;
    }
    v.valid = true;
    return v;
  }

  std::vector<Alarm> AccessClient::confirm_inclusion()
  {
    std::vector<Alarm> raised;
    if (!trusted_)
    {
      return raised;
    }
    std::vector<std::pair<SubmitRequest, ProofOfDelivery>> still_pending;
    for (auto& [request, pod] : pending_)
    {
      const auto h = pod.block_height + 1;
      if (trusted_->height < h)
      {
        still_pending.emplace_back(std::move(request), std::move(pod));
        continue;
      }
      std::optional<Block> block;
      if (trusted_->height == h)
      {
        block = trusted_;
      }
      else
      {
        try
        {
          block = ledger_.block_at(h);
        }
        catch (const std::exception&)
        {
          block.reset();
        }
      }
      if (!block || !verify_block(*block, utp_))
      {
        Alarm a{AlarmKind::no_response, "block after the POD is unavailable", {}};
        a.evidence.pod = pod;
        a.evidence.request = request;
        raise(a);
        raised.push_back(a);
        continue;
      }
      SignatureCache cache;
      ProofHistory source(&ledger_, *block, utp_, cache);
      try
      {
        bool found = false;
        for (const auto& e : source.entries(index_of(request.event)))
        {
          found = found || e.hash == pod.event_hash;
        }
        if (!found)
        {
          Alarm a{
            AlarmKind::pod_not_honored,
            "event missing from block " + std::to_string(h),
            source.evidence()};
          a.evidence.pod = pod;
          a.evidence.request = request;
          raise(a);
          raised.push_back(a);
        }
      }
      catch (const MisbehaviorDetected& m)
      {
        raise(m.alarm);
        raised.push_back(m.alarm);
      }
    }
    pending_ = std::move(still_pending);
    return raised;
  }
}
