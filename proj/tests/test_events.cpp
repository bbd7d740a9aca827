// Copyright (c) The revledger authors. All rights reserved.
// Licensed under the Apache 2.0 License.
#include "revledger/encoding.hpp"
#include "revledger/events.hpp"

#include "doctest.h"

using namespace revledger;

namespace
{
  KeyPair seeded(std::uint8_t b)
  {
    return KeyPair::from_seed(Bytes(32, b));
  }

  struct Fixture
  {
    KeyPair owner = seeded(1);
    KeyPair alice = seeded(2);
    KeyPair bob = seeded(3);
    KeyPair carol = seeded(4);
    GroupId group{owner.public_key(), "g"};
  };
}

TEST_CASE("member certificate encoding matches an independent encoder")
{
  Fixture f;
  auto cert = issue_certificate(
    f.owner, f.alice.public_key(), f.group, Role::member(), 7);
  CHECK(f.owner.public_key().hex() ==
        "018a88e3dd7409f195fd52db2d3cba5d72ca6709bf1d94121bf3748801b40f6f5c");
  CHECK(
    to_hex(encode(cert)) ==
    "1000000021018a88e3dd7409f195fd52db2d3cba5d72ca6709bf1d94121bf3748801b40f6f"
    "5c00000021018139770ea87d175f56a35466c34c7ecccb8d8a91b4ee37a25df60f5b8fc9b3"
    "940000002b0300000021018a88e3dd7409f195fd52db2d3cba5d72ca6709bf1d94121bf374"
    "8801b40f6f5c0000000167000000066d656d626572000000000000000700000040b2034af4"
    "0bd5641b3ea127b77e59431f74da278bec9e878f180ab5bc3dfc6d77851d8befe1c361c363"
    "94ced465d67286e7ea9f12d364e6d89fab269f80450606");
  CHECK(
    certificate_hash(cert).hex() ==
    "ec2e67ad39ce07905d5bd10e4d03a75806bcf2ca07f43f2ea1e9df1b127ab458");
  CHECK(
    member_index(f.group, Role::member(), f.alice.public_key()).hex() ==
    "a1a1ec91dbeb177350f7ff3bd1aa1c005ff4ce83512e4583adff5c2b23f19a5c");
  CHECK(
    suspension_index(f.group).hex() ==
    "2bffd009bd71b0a8604ebea275509e3fab8fb015ff349d700ca5b35c9054dbfa");
}

TEST_CASE("add and revoke share an index")
{
  Fixture f;
  Event add = issue_certificate(
    f.owner, f.alice.public_key(), f.group, Role::member(), 1);
  Event rev = issue_revocation(
    f.owner, f.alice.public_key(), f.group, Role::member(), 2);
  CHECK(index_of(add) == index_of(rev));
  CHECK(event_hash(add) != event_hash(rev));
  Event other_role = issue_certificate(
    f.owner, f.alice.public_key(), f.group, Role::leader(), 1);
  CHECK(index_of(other_role) != index_of(add));
  Event s = issue_suspend(f.owner, f.group, 3);
  Event r = issue_resume(f.owner, f.group, 4);
  CHECK(index_of(s) == index_of(r));
  CHECK(index_of(s) == suspension_index(f.group));
}

TEST_CASE("every event kind round trips and authenticates")
{
  Fixture f;
  auto cert = issue_certificate(
    f.owner, f.alice.public_key(), f.group, Role::member(), 1);
  std::vector<Event> events{
    cert,
    issue_revocation(f.owner, f.alice.public_key(), f.group, Role::member(), 2),
    issue_cert_revocation(f.owner, certificate_hash(cert), 3),
    reveal_preimage(Bytes(32, 9)),
    issue_suspend(f.alice, f.group, 4),
    issue_resume(f.alice, f.group, 5)};
  std::vector<std::string> actions{
    "add", "revoke", "revoke-cert", "revoke-preimage", "suspend", "resume"};
  for (std::size_t i = 0; i < events.size(); ++i)
  {
    const auto& e = events[i];
    CAPTURE(i);
    CHECK(decode_event(encode(e)) == e);
    CHECK(is_authentic(e));
    CHECK(action_of(e) == actions[i]);
    TimedEvent te{42, e};
    CHECK(decode_timed_event(encode(te)) == te);
  }
  CHECK(group_of(events[0]) != nullptr);
  CHECK(group_of(events[2]) == nullptr);
  CHECK(group_of(events[4]) != nullptr);
  CHECK_FALSE(issuer_of(events[3]).has_value());
  CHECK(freshness_of(events[1]) == 2);
}

TEST_CASE("tampered events fail authentication")
{
  Fixture f;
  auto cert = issue_certificate(
    f.owner, f.alice.public_key(), f.group, Role::member(), 1);
  cert.role = Role::leader();
  CHECK_FALSE(is_authentic(Event(cert)));

  auto pre = reveal_preimage(Bytes(32, 9));
  pre.preimage[0] ^= 1;
  CHECK_FALSE(is_authentic(Event(pre)));
  CHECK_THROWS_AS(reveal_preimage(Bytes(31, 0)), std::invalid_argument);

  auto enc = encode(Event(issue_suspend(f.owner, f.group, 1)));
  enc[0] = 0x7f;
  CHECK_THROWS_AS(decode_event(enc), DecodeError);
}

TEST_CASE("group names and roles are bounded")
{
  Fixture f;
  CHECK_NOTHROW(GroupId(f.owner.public_key(), std::string(256, 'x')));
  CHECK_THROWS_AS(
    GroupId(f.owner.public_key(), std::string(257, 'x')), std::invalid_argument);
  CHECK_THROWS_AS(Role(""), std::invalid_argument);
}

TEST_CASE("membership chain general checks")
{
  Fixture f;
  const auto leader = Role::leader();
  const auto member = Role::member();
  auto c1 = issue_certificate(f.owner, f.alice.public_key(), f.group, leader, 1);
  auto c2 = issue_certificate(f.alice, f.bob.public_key(), f.group, member, 2);
  const auto owner = f.owner.public_key();
  const auto bob = f.bob.public_key();

  CHECK(general_checks(MemberChain{c1, c2}, owner, bob, f.group, member));

  SUBCASE("the owner leads with an empty chain")
  {
    CHECK(general_checks(MemberChain{}, owner, owner, f.group, leader));
    CHECK(
      general_checks(MemberChain{}, owner, owner, f.group, member).error ==
      ChainError::wrong_role);
    CHECK(
      general_checks(MemberChain{}, owner, bob, f.group, leader).error ==
      ChainError::wrong_subject);
  }
  SUBCASE("root must be the group owner")
  {
    auto r = general_checks(
      MemberChain{c1, c2}, f.alice.public_key(), bob, f.group, member);
    CHECK(r.error == ChainError::wrong_root);
    auto foreign = issue_certificate(f.carol, bob, f.group, member, 1);
    CHECK(
      general_checks(MemberChain{foreign}, owner, bob, f.group, member).error ==
      ChainError::wrong_root);
  }
  SUBCASE("broken link")
  {
    auto stray = issue_certificate(f.carol, bob, f.group, member, 2);
    auto r = general_checks(MemberChain{c1, stray}, owner, bob, f.group, member);
    CHECK(r.error == ChainError::broken_link);
    CHECK(r.position == 1);
  }
  SUBCASE("intermediate link must delegate leadership")
  {
    auto weak = issue_certificate(f.owner, f.alice.public_key(), f.group, member, 1);
    auto r = general_checks(MemberChain{weak, c2}, owner, bob, f.group, member);
    CHECK(r.error == ChainError::wrong_role);
    CHECK(r.position == 0);
  }
  SUBCASE("wrong final role or subject")
  {
    CHECK(
      general_checks(MemberChain{c1, c2}, owner, bob, f.group, leader).error ==
      ChainError::wrong_role);
    CHECK(
      general_checks(
        MemberChain{c1, c2}, owner, f.carol.public_key(), f.group, member)
        .error == ChainError::wrong_subject);
  }
  SUBCASE("bad signature")
  {
    auto forged = c2;
    forged.freshness = 99;
    CHECK(
      general_checks(MemberChain{c1, forged}, owner, bob, f.group, member)
        .error == ChainError::bad_signature);
  }
  SUBCASE("certificate for another group")
  {
    GroupId other{owner, "other"};
    auto c = issue_certificate(f.owner, bob, other, member, 1);
    CHECK(
      general_checks(MemberChain{c}, owner, bob, f.group, member).error ==
      ChainError::wrong_role);
  }
  CHECK(decode_member_chain(encode(MemberChain{c1, c2})) == MemberChain{c1, c2});
}

TEST_CASE("hierarchical chain checks")
{
  Fixture f;
  auto h1 = issue_hier_certificate(
    f.owner, f.alice.public_key(), {"read", "write"}, Validity{10, 100});
  auto h2 = issue_hier_certificate(
    f.alice, f.bob.public_key(), {"read", "exec"}, std::nullopt, hash(Bytes(32, 1)));
  HierChain chain{h1, h2};
  const auto owner = f.owner.public_key();
  const auto bob = f.bob.public_key();

  CHECK(general_checks(chain, owner, bob, 50));
  CHECK(auth_intersection(chain) == std::set<std::string>{"read"});
  CHECK(general_checks(chain, owner, bob, 5).error == ChainError::expired);
  CHECK(general_checks(chain, owner, bob, 101).error == ChainError::expired);
  CHECK(
    general_checks(HierChain{h2}, owner, bob, 50).error ==
    ChainError::wrong_root);
  CHECK(
    general_checks(chain, owner, f.carol.public_key(), 50).error ==
    ChainError::wrong_subject);
  CHECK(decode_hier_chain(encode(chain)) == chain);
  CHECK_THROWS_AS(
    issue_hier_certificate(f.owner, bob, {}, Validity{5, 1}),
    std::invalid_argument);
}
