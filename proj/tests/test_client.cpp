// Copyright (c) The revledger authors. All rights reserved.
// Licensed under the Apache 2.0 License.
#include "revledger/auditor.hpp"
#include "revledger/client.hpp"
#include "revledger/ledger.hpp"

#include "doctest.h"

#include <functional>

using namespace revledger;

namespace
{
  KeyPair seeded(std::uint8_t b)
  {
    return KeyPair::from_seed(Bytes(32, b));
  }

  LedgerOptions per_event_blocks()
  {
    LedgerOptions o;
    o.clock = [] { return std::uint64_t{1700000000}; };
    o.block_events = 1;
    return o;
  }

  // Forwards to an honest ledger unless a hook overrides the call.
  class TamperLedger : public LedgerApi
  {
  public:
    explicit TamperLedger(LedgerApi& inner) : inner_(inner) {}

    std::function<std::optional<SubmitResponse>(const SubmitRequest&)> on_submit;
    std::function<void(QueryResponse&)> on_query;
    std::function<std::optional<Block>()> on_latest;

    SubmitResponse submit(const SubmitRequest& r) override
    {
      if (on_submit)
      {
        if (auto forged = on_submit(r))
        {
          return *forged;
        }
      }
      return inner_.submit(r);
    }
    QueryResponse query(const Digest& i, std::optional<std::uint64_t> h) override
    {
      auto r = inner_.query(i, h);
      if (on_query)
      {
        on_query(r);
      }
      return r;
    }
    SignedAuthorization fetch_authorization(const Digest& h) override
    {
      return inner_.fetch_authorization(h);
    }
    Block latest_block() override
    {
      if (on_latest)
      {
        if (auto b = on_latest())
        {
          return *b;
        }
      }
      return inner_.latest_block();
    }
    std::optional<Block> block_at(std::uint64_t h) override
    {
      return inner_.block_at(h);
    }
    std::vector<AuditItem> audit_items(std::size_t c, std::size_t m, bool compact) override
    {
      return inner_.audit_items(c, m, compact);
    }

  private:
    LedgerApi& inner_;
  };

  struct World
  {
    KeyPair utp = seeded(9);
    KeyPair owner = seeded(1);
    KeyPair alice = seeded(2);
    KeyPair bob = seeded(3);
    KeyPair carol = seeded(4);
    KeyPair david = seeded(5);
    GroupId group{owner.public_key(), "family"};
    Ledger ledger{seeded(9), per_event_blocks()};
    LocalLedger api{ledger};
    TamperLedger tamper{api};
    Auditor auditor{seeded(20), utp.public_key(), AuditorMode::proof_stream};
    AccessClient client{tamper, utp.public_key(), &auditor};

    World()
    {
      auditor.set_relay(&api);
      sync();
    }

    void sync()
    {
      auditor.sync(api);
      client.refresh();
    }

    MemberCertificate add(
      const KeyPair& by,
      const MemberChain& chain,
      const KeyPair& who,
      const Role& role = Role::member())
    {
      auto out = client.add_member(by, chain, group, role, who.public_key());
      REQUIRE(out.accepted());
      sync();
      return std::get<MemberCertificate>(out.request.event);
    }

    void revoke(
      const KeyPair& by,
      const MemberChain& chain,
      const KeyPair& who,
      const Role& role = Role::member())
    {
      auto out = client.revoke_member(by, chain, group, role, who.public_key());
      REQUIRE(out.accepted());
      sync();
    }

    Membership verdict(const MemberChain& chain, const KeyPair& who, const Role& role)
    {
      return client.verify_member(chain, group, role, who.public_key()).verdict;
    }
  };

  Alarm round_trip(const Alarm& a)
  {
    return decode_alarm(encode(a));
  }
}

TEST_CASE("delegated membership survives the delegator's later revocation")
{
  World w;
  auto ca = w.add(w.owner, {}, w.alice, Role::leader());
  auto cb = w.add(w.alice, {ca}, w.bob);
  CHECK(w.verdict({ca, cb}, w.bob, Role::member()) == Membership::is_member);
  CHECK(w.verdict({ca}, w.alice, Role::leader()) == Membership::is_member);

  w.revoke(w.owner, {}, w.alice, Role::leader());
  CHECK(w.verdict({ca, cb}, w.bob, Role::member()) == Membership::is_member);
  CHECK(w.verdict({ca}, w.alice, Role::leader()) == Membership::not_member);
  auto d = w.client.check_chain({ca}, w.group, Role::leader(), w.alice.public_key());
  CHECK(d.status == ChainStatus::revoked);
  REQUIRE(d.revocation);
  CHECK(std::holds_alternative<MemberRevocation>(d.revocation->event));

  // A chain that is not the subject's, or not registered, conveys nothing.
  CHECK(w.verdict({ca, cb}, w.carol, Role::member()) == Membership::not_member);
  auto unregistered =
    issue_certificate(w.owner, w.carol.public_key(), w.group, Role::member(), 0);
  CHECK(w.verdict({unregistered}, w.carol, Role::member()) == Membership::not_member);
  CHECK(w.client.alarms().empty());
}

TEST_CASE("the owner is a leader with the empty chain")
{
  World w;
  CHECK(w.verdict({}, w.owner, Role::leader()) == Membership::is_member);
  CHECK(w.verdict({}, w.alice, Role::leader()) == Membership::not_member);
}

TEST_CASE("a revoked leader is refused and the refusal is justified")
{
  World w;
  auto ca = w.add(w.owner, {}, w.alice, Role::leader());
  w.revoke(w.owner, {}, w.alice, Role::leader());

  auto out = w.client.add_member(w.alice, {ca}, w.group, Role::member(), w.carol.public_key());
  REQUIRE(out.rejection);
  CHECK(out.rejection->reason == RejectReason::unauthorized);
  REQUIRE(out.rejection->blocking);
  REQUIRE(out.assessment);
  CHECK(out.assessment->verdict == RefusalVerdict::justified);
  CHECK_FALSE(out.alarm);

  auto empty = w.client.add_member(w.bob, {}, w.group, Role::member(), w.carol.public_key());
  REQUIRE(empty.rejection);
  CHECK(empty.rejection->reason == RejectReason::unauthorized);
  CHECK(empty.assessment->verdict == RefusalVerdict::justified);
  CHECK(w.client.alarms().empty());
}

TEST_CASE("a leader of another branch may revoke any member")
{
  World w;
  auto ca = w.add(w.owner, {}, w.alice, Role::leader());
  auto cd = w.add(w.owner, {}, w.david, Role::leader());
  auto cb = w.add(w.alice, {ca}, w.bob);
  w.revoke(w.david, {cd}, w.bob);
  auto v = w.client.verify_member({ca, cb}, w.group, Role::member(), w.bob.public_key());
  CHECK(v.verdict == Membership::not_member);
  CHECK(v.decision.status == ChainStatus::revoked);
  CHECK(w.client.alarms().empty());

  // Re-adding restores membership under the new certificate only.
  auto cb2 = w.add(w.alice, {ca}, w.bob);
  CHECK(w.verdict({ca, cb2}, w.bob, Role::member()) == Membership::is_member);
  CHECK(w.verdict({ca, cb}, w.bob, Role::member()) == Membership::not_member);
}

TEST_CASE("a stored revocation without valid authorization raises a verifiable alarm")
{
  World w;
  auto ca = w.add(w.owner, {}, w.alice, Role::leader());
  auto cb = w.add(w.alice, {ca}, w.bob);

  // Carol is no leader; an operator stores her revocation of Bob anyway.
  auto rev = issue_revocation(
    w.carol, w.bob.public_key(), w.group, Role::member(), w.ledger.latest_t());
  w.ledger.append_unvalidated(rev, StoredAuthorization{std::nullopt, {}});
  w.ledger.publish_block();
  w.sync();

  auto v = w.client.verify_member({ca, cb}, w.group, Role::member(), w.bob.public_key());
  CHECK(v.verdict == Membership::alarm);
  REQUIRE(v.alarm);
  CHECK(v.alarm->kind == AlarmKind::unauthorized_revocation_stored);
  CHECK(verify_evidence(*v.alarm, w.utp.public_key()));
  CHECK(verify_evidence(round_trip(*v.alarm), w.utp.public_key()));

  // Evidence is only as good as its signatures.
  auto forged = *v.alarm;
  forged.evidence.blocks[0].root.bytes[0] ^= 1;
  CHECK_FALSE(verify_evidence(forged, w.utp.public_key()));
  CHECK_FALSE(verify_evidence(*v.alarm, w.owner.public_key()));
}

TEST_CASE("a stored revocation with no authorization at all raises an alarm")
{
  World w;
  auto ca = w.add(w.owner, {}, w.alice, Role::leader());
  auto rev = issue_revocation(
    w.owner, w.alice.public_key(), w.group, Role::leader(), w.ledger.latest_t());
  w.ledger.append_unvalidated(rev, std::nullopt);
  w.ledger.publish_block();
  w.sync();
  auto v = w.client.verify_member({ca}, w.group, Role::leader(), w.alice.public_key());
  REQUIRE(v.alarm);
  CHECK(v.alarm->kind == AlarmKind::unauthorized_revocation_stored);
  CHECK(verify_evidence(*v.alarm, w.utp.public_key()));
}

TEST_CASE("a refusal without a valid reason is wrongful")
{
  World w;
  auto ca = w.add(w.owner, {}, w.alice, Role::leader());
  w.tamper.on_submit = [&](const SubmitRequest& r) -> std::optional<SubmitResponse> {
    Rejection rej;
    rej.reason = RejectReason::unauthorized;
    rej.event_hash = event_hash(r.event);
    rej.detail = "no";
    rej.t_latest = w.ledger.latest_t();
    rej.sig = w.utp.sign(signing_payload(rej));
    return rej;
  };
  auto out = w.client.add_member(w.alice, {ca}, w.group, Role::member(), w.bob.public_key());
  REQUIRE(out.rejection);
  REQUIRE(out.assessment);
  CHECK(out.assessment->verdict == RefusalVerdict::wrongful);
  REQUIRE(out.alarm);
  CHECK(out.alarm->kind == AlarmKind::wrongful_refusal);
  CHECK(verify_evidence(*out.alarm, w.utp.public_key()));
  CHECK(verify_evidence(round_trip(*out.alarm), w.utp.public_key()));
  // The auditor relayed the event to the honest ledger.
  CHECK(out.pod);
  w.tamper.on_submit = {};
  w.sync();
  CHECK(w.verdict({ca, std::get<MemberCertificate>(out.request.event)}, w.bob, Role::member()) ==
        Membership::is_member);
}

TEST_CASE("genuine refusals are judged justified")
{
  World w;
  auto ca = w.add(w.owner, {}, w.alice, Role::leader());
  w.add(w.alice, {ca}, w.bob);

  SUBCASE("stale")
  {
    auto rev = issue_revocation(w.alice, w.bob.public_key(), w.group, Role::member(), 1);
    auto out = w.client.submit({rev, {ca}});
    REQUIRE(out.rejection);
    CHECK(out.rejection->reason == RejectReason::stale_freshness);
    CHECK(out.assessment->verdict == RefusalVerdict::justified);
  }
  SUBCASE("duplicate")
  {
    auto again = issue_certificate(
      w.alice, w.bob.public_key(), w.group, Role::member(), w.ledger.latest_t());
    REQUIRE(w.client.submit({again, {ca}}).accepted());
    w.sync();
    auto out = w.client.submit({again, {ca}});
    REQUIRE(out.rejection);
    CHECK(out.rejection->reason == RejectReason::duplicate_event);
    CHECK(out.assessment->verdict == RefusalVerdict::justified);
  }
  SUBCASE("bad signature")
  {
    auto bad = issue_certificate(
      w.alice, w.carol.public_key(), w.group, Role::member(), w.ledger.latest_t());
    bad.sig.bytes[0] ^= 1;
    auto out = w.client.submit({bad, {ca}});
    REQUIRE(out.rejection);
    CHECK(out.rejection->reason == RejectReason::bad_signature);
    CHECK(out.assessment->verdict == RefusalVerdict::justified);
  }
  CHECK(w.client.alarms().empty());
}

TEST_CASE("a tampered proof raises an invalid proof alarm")
{
  World w;
  auto ca = w.add(w.owner, {}, w.alice, Role::leader());
  w.tamper.on_query = [](QueryResponse& r) {
    if (!r.proof.entries.empty())
    {
      r.proof.entries.back().t += 1;
    }
  };
  auto v = w.client.verify_member({ca}, w.group, Role::leader(), w.alice.public_key());
  CHECK(v.verdict == Membership::alarm);
  REQUIRE(v.alarm);
  CHECK(v.alarm->kind == AlarmKind::invalid_proof);
  CHECK(verify_evidence(*v.alarm, w.utp.public_key()));
}

TEST_CASE("a block that differs from the auditor's is a fork")
{
  World w;
  w.add(w.owner, {}, w.alice, Role::leader());
  const auto real = w.ledger.latest_block();
  auto forged = make_block(
    w.utp, real.height, real.prev, Digest{}, real.t_latest, real.t_utc);
  w.tamper.on_latest = [&]() -> std::optional<Block> { return forged; };
  auto alarm = w.client.refresh();
  REQUIRE(alarm);
  CHECK(alarm->kind == AlarmKind::fork_detected);
  CHECK(verify_evidence(*alarm, w.utp.public_key()));
}

TEST_CASE("an accepted event missing from the next block breaks the POD")
{
  World w;
  auto ca = w.add(w.owner, {}, w.alice, Role::leader());
  CHECK(w.client.confirm_inclusion().empty());
  w.tamper.on_submit = [&](const SubmitRequest& r) -> std::optional<SubmitResponse> {
    const auto b = w.ledger.latest_block();
    ProofOfDelivery pod{event_hash(r.event), b.height, b.hash(), b.t_latest, b.t_utc, {}};
    pod.sig = w.utp.sign(signing_payload(pod));
    return pod;
  };
  auto out = w.client.add_member(w.alice, {ca}, w.group, Role::member(), w.bob.public_key());
  REQUIRE(out.accepted());
  CHECK(w.client.pending_pods() == 1);
  w.tamper.on_submit = {};
  w.ledger.publish_block();
  w.sync();
  auto alarms = w.client.confirm_inclusion();
  REQUIRE(alarms.size() == 1);
  CHECK(alarms[0].kind == AlarmKind::pod_not_honored);
  CHECK(verify_evidence(alarms[0], w.utp.public_key()));
  CHECK(verify_evidence(round_trip(alarms[0]), w.utp.public_key()));
}

TEST_CASE("honored PODs clear without alarms")
{
  World w;
  auto ca = w.add(w.owner, {}, w.alice, Role::leader());
  w.add(w.alice, {ca}, w.bob);
  CHECK(w.client.confirm_inclusion().empty());
  CHECK(w.client.pending_pods() == 0);
  CHECK(w.client.alarms().empty());
}

TEST_CASE("suspension gives one leader exclusive control")
{
  World w;
  auto ca = w.add(w.owner, {}, w.alice, Role::leader());
  auto cd = w.add(w.owner, {}, w.david, Role::leader());
  REQUIRE(w.client.suspend(w.alice, {ca}, w.group).accepted());
  w.sync();

  auto blocked = w.client.add_member(w.david, {cd}, w.group, Role::member(), w.bob.public_key());
  REQUIRE(blocked.rejection);
  CHECK(blocked.rejection->reason == RejectReason::group_suspended);
  CHECK(blocked.assessment->verdict == RefusalVerdict::justified);

  auto second = w.client.suspend(w.david, {cd}, w.group);
  REQUIRE(second.rejection);
  CHECK(second.rejection->reason == RejectReason::group_suspended);
  CHECK(second.assessment->verdict == RefusalVerdict::justified);

  auto foreign = w.client.resume(w.david, w.group);
  REQUIRE(foreign.rejection);
  CHECK(foreign.rejection->reason == RejectReason::unauthorized);
  CHECK(foreign.assessment->verdict == RefusalVerdict::justified);

  w.revoke(w.alice, {ca}, w.david, Role::leader());
  REQUIRE(w.client.resume(w.alice, w.group).accepted());
  w.sync();
  auto after = w.client.add_member(w.david, {cd}, w.group, Role::member(), w.bob.public_key());
  REQUIRE(after.rejection);
  CHECK(after.rejection->reason == RejectReason::unauthorized);
  CHECK(after.assessment->verdict == RefusalVerdict::justified);
  CHECK(w.client.alarms().empty());
}

TEST_CASE("hierarchical chains: certificate and preimage revocation")
{
  World w;
  const std::uint64_t now = 1700000000;
  auto root = w.owner;
  auto c1 = issue_hier_certificate(root, w.alice.public_key(), {"read"});
  auto c2 = issue_hier_certificate(w.alice, w.bob.public_key(), {"read"});
  auto c3 = issue_hier_certificate(w.bob, w.carol.public_key(), {"read"});
  HierChain chain{c1, c2, c3};
  CHECK(w.client.verify_hier_chain(chain, root.public_key(), now).valid);

  SUBCASE("revoking the middle certificate invalidates the chain until reissued")
  {
    REQUIRE(w.client.revoke_cert(w.alice, certificate_hash(c2)).accepted());
    w.sync();
    CHECK_FALSE(w.client.verify_hier_chain(chain, root.public_key(), now).valid);
    auto c2b = issue_hier_certificate(w.alice, w.bob.public_key(), {"read"}, Validity{0, now + 10});
    CHECK(w.client.verify_hier_chain({c1, c2b, c3}, root.public_key(), now).valid);
  }
  SUBCASE("a revocation by someone else is ignored")
  {
    REQUIRE(w.client.revoke_cert(w.carol, certificate_hash(c2)).accepted());
    w.sync();
    CHECK(w.client.verify_hier_chain(chain, root.public_key(), now).valid);
  }
  SUBCASE("one preimage revokes every certificate committing to it")
  {
    const Bytes secret(32, 0x5a);
    const auto commitment = reveal_preimage(secret).commitment;
    auto d1 = issue_hier_certificate(root, w.alice.public_key(), {"a"}, std::nullopt, commitment);
    auto d2 = issue_hier_certificate(root, w.bob.public_key(), {"b"}, std::nullopt, commitment);
    CHECK(w.client.verify_hier_chain({d1}, root.public_key(), now).valid);
    REQUIRE(w.client.publish_preimage(secret).accepted());
    w.sync();
    CHECK_FALSE(w.client.verify_hier_chain({d1}, root.public_key(), now).valid);
    CHECK_FALSE(w.client.verify_hier_chain({d2}, root.public_key(), now).valid);
  }
  SUBCASE("an expired certificate is invalid")
  {
    auto e1 = issue_hier_certificate(root, w.alice.public_key(), {"read"}, Validity{0, now - 1});
    CHECK_FALSE(w.client.verify_hier_chain({e1}, root.public_key(), now).valid);
  }
  CHECK(w.client.alarms().empty());
}
