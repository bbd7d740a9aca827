// Copyright (c) The revledger authors. All rights reserved.
// Licensed under the Apache 2.0 License.
#include "revledger/encoding.hpp"
#include "revledger/ledger.hpp"

#include "doctest.h"
#include "temp_dir.hpp"

#include <fstream>

using namespace revledger;

namespace
{
  KeyPair seeded(std::uint8_t b)
  {
    return KeyPair::from_seed(Bytes(32, b));
  }

  LedgerOptions fixed_clock(std::optional<std::filesystem::path> dir = {})
  {
    LedgerOptions o;
    o.clock = [] { return std::uint64_t{1700000000}; };
    o.data_dir = std::move(dir);
    return o;
  }

  struct Fixture
  {
    KeyPair utp = seeded(9);
    KeyPair owner = seeded(1);
    KeyPair alice = seeded(2);
    KeyPair bob = seeded(3);
    KeyPair carol = seeded(4);
    GroupId group{owner.public_key(), "g"};
    Ledger ledger{seeded(9), fixed_clock()};

    SubmitResponse add(
      const KeyPair& by,
      const KeyPair& who,
      const Role& role,
      const MemberChain& chain = {})
    {
      return ledger.submit(
        {issue_certificate(by, who.public_key(), group, role, ledger.latest_t()),
         chain});
    }

    MemberCertificate cert_for(const KeyPair& by, const KeyPair& who, SequenceNumber t)
    {
      for (const auto& e : ledger.history())
      {
        if (e.t != t)
        {
          continue;
        }
        const auto& c = std::get<MemberCertificate>(e.event);
        REQUIRE(c.subject == who.public_key());
        REQUIRE(c.issuer == by.public_key());
        return c;
      }
      FAIL("no event at t");
      return {};
    }
  };

  const Rejection& rejected(const SubmitResponse& r)
  {
    REQUIRE(std::holds_alternative<Rejection>(r));
    return std::get<Rejection>(r);
  }

  const ProofOfDelivery& accepted(const SubmitResponse& r)
  {
    if (const auto* rej = std::get_if<Rejection>(&r))
    {
      FAIL_CHECK("rejected: " << to_string(rej->reason) << " " << rej->detail);
    }
    REQUIRE(std::holds_alternative<ProofOfDelivery>(r));
    return std::get<ProofOfDelivery>(r);
  }
}

TEST_CASE("owner additions are accepted and sequenced")
{
  Fixture f;
  CHECK(f.ledger.latest_t() == 0);
  CHECK(f.ledger.latest_block().height == 0);
  CHECK(verify_block(f.ledger.latest_block(), f.utp.public_key()));

  auto pod = accepted(f.add(f.owner, f.alice, Role::leader()));
  CHECK(verify_pod(pod, f.utp.public_key()));
  CHECK(pod.block_height == 0);
  CHECK(f.ledger.latest_t() == 1);

  auto b = f.ledger.publish_block();
  CHECK(b.height == 1);
  CHECK(b.prev == f.ledger.block_at(0)->hash());
  CHECK(b.t_latest == 1);

  auto q = f.ledger.query(
    member_index(f.group, Role::leader(), f.alice.public_key()));
  CHECK(q.block == b);
  CHECK(verify_proof(
    member_index(f.group, Role::leader(), f.alice.public_key()),
    q.proof,
    b.root));
  REQUIRE(q.proof.entries.size() == 1);
  CHECK(q.proof.entries[0].t == 1);
}

TEST_CASE("authenticity and duplicates")
{
  Fixture f;
  auto cert = issue_certificate(
    f.owner, f.alice.public_key(), f.group, Role::member(), 0);
  auto forged = cert;
  forged.role = Role::leader();
  CHECK(
    rejected(f.ledger.submit({forged, {}})).reason ==
    RejectReason::bad_signature);

  accepted(f.ledger.submit({cert, {}}));
  auto dup = rejected(f.ledger.submit({cert, {}}));
  CHECK(dup.reason == RejectReason::duplicate_event);
  CHECK(verify_rejection(dup, f.utp.public_key()));

  auto bad_preimage = reveal_preimage(Bytes(32, 0x11));
  bad_preimage.commitment = hash(Bytes(32, 0x12));
  CHECK(
    rejected(f.ledger.submit({bad_preimage, {}})).reason ==
    RejectReason::bad_preimage);
}

TEST_CASE("stale freshness is refused")
{
  Fixture f;
  accepted(f.add(f.owner, f.bob, Role::member()));
  accepted(f.add(f.owner, f.carol, Role::member()));
  // Bob's index was last written at t=1, so a stamp of 0 is stale.
  auto old = issue_revocation(
    f.owner, f.bob.public_key(), f.group, Role::member(), 0);
  auto r = rejected(f.ledger.submit({old, {}}));
  CHECK(r.reason == RejectReason::stale_freshness);
  // Equal freshness is allowed: an add followed by a revoke seen at t=1.
  auto same = issue_revocation(
    f.owner, f.bob.public_key(), f.group, Role::member(), 1);
  accepted(f.ledger.submit({same, {}}));
}

TEST_CASE("unauthorized issuers are refused with the blocking revocation")
{
  Fixture f;
  accepted(f.add(f.owner, f.alice, Role::leader()));
  auto alice_cert = f.cert_for(f.owner, f.alice, 1);

  // A non-member cannot add.
  auto r = rejected(f.add(f.bob, f.carol, Role::member()));
  CHECK(r.reason == RejectReason::unauthorized);
  CHECK_FALSE(r.blocking.has_value());

  // Chain rooted at the owner works.
  accepted(f.add(f.alice, f.bob, Role::member(), {alice_cert}));

  // The owner revokes Alice; her chain now carries Rev'.
  auto rev = issue_revocation(
    f.owner, f.alice.public_key(), f.group, Role::leader(), f.ledger.latest_t());
  accepted(f.ledger.submit({rev, {}}));
  auto r2 = rejected(f.add(f.alice, f.carol, Role::member(), {alice_cert}));
  CHECK(r2.reason == RejectReason::unauthorized);
  REQUIRE(r2.blocking.has_value());
  CHECK(r2.blocking->t == 3);
  CHECK(std::get<MemberRevocation>(r2.blocking->event) == rev);
  REQUIRE(r2.blocking_authorization.has_value());
  CHECK(r2.blocking_authorization->chain.empty());
  CHECK_FALSE(r2.blocking_authorization->scope.has_value());
}

TEST_CASE("suspension blocks everyone but the suspender")
{
  Fixture f;
  accepted(f.add(f.owner, f.alice, Role::leader()));
  auto alice_cert = f.cert_for(f.owner, f.alice, 1);

  accepted(f.ledger.submit(
    {issue_suspend(f.owner, f.group, f.ledger.latest_t()), {}}));
  auto r = rejected(f.add(f.alice, f.bob, Role::member(), {alice_cert}));
  CHECK(r.reason == RejectReason::group_suspended);
  CHECK(
    rejected(f.ledger.submit(
               {issue_resume(f.alice, f.group, f.ledger.latest_t()),
                {alice_cert}}))
      .reason == RejectReason::unauthorized);

  // The suspender continues to act.
  accepted(f.add(f.owner, f.carol, Role::member()));
  accepted(f.ledger.submit(
    {issue_resume(f.owner, f.group, f.ledger.latest_t()), {}}));
  accepted(f.add(f.alice, f.bob, Role::member(), {alice_cert}));
}

TEST_CASE("issuer and scoped certificate revocations")
{
  Fixture f;
  accepted(f.add(f.owner, f.alice, Role::leader()));
  auto alice_cert = f.cert_for(f.owner, f.alice, 1);
  accepted(f.add(f.alice, f.bob, Role::member(), {alice_cert}));
  auto bob_cert = f.cert_for(f.alice, f.bob, 2);

  // Issuer-signed: needs no chain.
  accepted(f.ledger.submit(
    {issue_cert_revocation(f.alice, certificate_hash(bob_cert), 0), {}}));
  CHECK(
    f.ledger.internal_check_chain({alice_cert, bob_cert}, f.group, Role::member(), f.bob.public_key())
      .status == ChainStatus::revoked);

  // Leader-signed on behalf of the group: chain checked and stored.
  accepted(f.add(f.alice, f.carol, Role::member(), {alice_cert}));
  auto carol_cert = f.cert_for(f.alice, f.carol, 4);
  auto by_owner = issue_cert_revocation(
    f.owner, certificate_hash(carol_cert), f.ledger.latest_t());
  accepted(f.ledger.submit({by_owner, {}, f.group}));
  auto signed_auth = f.ledger.fetch_authorization(event_hash(by_owner));
  CHECK(verify_authorization(signed_auth, f.utp.public_key()));
  auto auth = signed_auth.authorization;
  REQUIRE(auth.has_value());
  CHECK(auth->scope == f.group);
  auto none = f.ledger.fetch_authorization(certificate_hash(carol_cert));
  CHECK_FALSE(none.authorization.has_value());
  CHECK(verify_authorization(none, f.utp.public_key()));
  CHECK(decode_signed_authorization(encode(none)) == none);
  CHECK(
    f.ledger.internal_check_chain({alice_cert, carol_cert}, f.group, Role::member(), f.carol.public_key())
      .status == ChainStatus::revoked);

  // A scoped revocation by a non-leader is refused.
  auto by_bob = issue_cert_revocation(
    f.bob, certificate_hash(alice_cert), f.ledger.latest_t());
  CHECK(
    rejected(f.ledger.submit({by_bob, {}, f.group})).reason ==
    RejectReason::unauthorized);
}

TEST_CASE("audit stream chains every update to the published blocks")
{
  Fixture f;
  accepted(f.add(f.owner, f.alice, Role::leader()));
  auto alice_cert = f.cert_for(f.owner, f.alice, 1);
  f.ledger.publish_block();
  for (int i = 0; i < 20; ++i)
  {
    auto k = KeyPair::from_seed(Bytes(32, static_cast<std::uint8_t>(40 + i)));
    accepted(f.add(f.alice, k, Role::member(), {alice_cert}));
    if (i % 7 == 0)
    {
      f.ledger.publish_block();
    }
  }
  f.ledger.publish_block();

  auto items = f.ledger.audit_items(0, 1000);
  CHECK(items.size() == f.ledger.audit_size());
  Digest root = Digest::zero();
  SequenceNumber last_t = 0;
  std::uint64_t next_height = 0;
  for (const auto& item : items)
  {
    if (const auto* up = std::get_if<UpdateProof>(&item))
    {
      const auto after = proof_root(up->after);
      REQUIRE(after.has_value());
      CHECK(verify_update(*up, root, *after));
      CHECK(up->t > last_t);
      last_t = up->t;
      root = *after;
    }
    else
    {
      const auto& b = std::get<Block>(item);
      CHECK(b.height == next_height++);
      CHECK(b.root == root);
      CHECK(verify_block(b, f.utp.public_key()));
    }
  }
  CHECK(root == f.ledger.current_root());
}

TEST_CASE("queries read the snapshot of the requested block")
{
  Fixture f;
  accepted(f.add(f.owner, f.alice, Role::leader()));
  auto b1 = f.ledger.publish_block();
  accepted(f.add(f.owner, f.bob, Role::leader()));
  f.ledger.publish_block();
  const auto bob_index = member_index(f.group, Role::leader(), f.bob.public_key());
  auto old = f.ledger.query(bob_index, 1);
  CHECK(old.block == b1);
  CHECK_FALSE(old.proof.is_presence());
  CHECK(verify_proof(bob_index, old.proof, b1.root));
  CHECK(f.ledger.query(bob_index).proof.is_presence());
  CHECK_THROWS_AS(f.ledger.query(bob_index, 99), std::out_of_range);
}

TEST_CASE("block publication by count and by interval")
{
  std::uint64_t now = 100;
  LedgerOptions o;
  o.clock = [&] { return now; };
  o.block_events = 3;
  o.block_interval = 10;
  Ledger ledger(seeded(9), o);
  auto owner = seeded(1);
  GroupId g{owner.public_key(), "g"};
  for (std::uint8_t i = 0; i < 3; ++i)
  {
    ledger.submit(
      {issue_certificate(owner, seeded(20 + i).public_key(), g, Role::member(), 0), {}});
  }
  CHECK(ledger.latest_block().height == 1);
  CHECK_FALSE(ledger.tick().has_value());
  now = 110;
  auto b = ledger.tick();
  REQUIRE(b.has_value());
  CHECK(b->height == 2);
}

TEST_CASE("restart replays the log to the same root")
{
  TempDir dir;
  Digest root;
  Block last;
  {
    Fixture f;
    Ledger ledger(seeded(9), fixed_clock(dir.path()));
    for (std::uint8_t i = 0; i < 50; ++i)
    {
      auto k = seeded(100 + i);
      ledger.submit(
        {issue_certificate(f.owner, k.public_key(), f.group, Role::member(), 0), {}});
      if (i % 16 == 0)
      {
        ledger.publish_block();
      }
    }
    // Unblocked tail events are replayed too.
    root = ledger.current_root();
    last = ledger.latest_block();
  }
  Ledger again(seeded(9), fixed_clock(dir.path()));
  CHECK(again.current_root() == root);
  CHECK(again.latest_block() == last);
  CHECK(again.latest_t() == 50);
}

TEST_CASE("a torn tail record is dropped, a corrupted log is refused")
{
  TempDir dir;
  Fixture f;
  Digest root;
  {
    Ledger ledger(seeded(9), fixed_clock(dir.path()));
    ledger.submit(
      {issue_certificate(f.owner, f.alice.public_key(), f.group, Role::member(), 0), {}});
    ledger.publish_block();
    root = ledger.current_root();
  }
  const auto log = dir.path() / Ledger::log_file_name;
  {
    std::ofstream out(log, std::ios::binary | std::ios::app);
    out.write("\x00\x00\x01\x00garbage", 11);
  }
  {
    Ledger again(seeded(9), fixed_clock(dir.path()));
    CHECK(again.current_root() == root);
  }

  // The genesis block comes first; flip the low byte of the sequence number
  // in the event record after it.
  {
    std::fstream io(log, std::ios::binary | std::ios::in | std::ios::out);
    std::uint8_t len[4];
    io.read(reinterpret_cast<char*>(len), 4);
    const auto first = get_u32(len);
    io.seekp(4 + first + 4 + 1 + 7);
    io.put('\x05');
  }
  CHECK_THROWS_AS(Ledger(seeded(9), fixed_clock(dir.path())), LogCorrupted);
}

TEST_CASE("unvalidated appends bypass every check")
{
  Fixture f;
  auto rev = issue_revocation(
    f.bob, f.alice.public_key(), f.group, Role::leader(), 0);
  CHECK(f.ledger.append_unvalidated(rev, std::nullopt) == 1);
  CHECK(f.ledger.history().size() == 1);
}
