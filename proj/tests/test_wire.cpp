// Copyright (c) The revledger authors. All rights reserved.
// Licensed under the Apache 2.0 License.
#include "revledger/auditor.hpp"
#include "revledger/client.hpp"
#include "revledger/ledger.hpp"
#include "revledger/wire.hpp"

#include "doctest.h"

#include <sys/socket.h>
#include <unistd.h>

using namespace revledger;

namespace
{
  KeyPair seeded(std::uint8_t b)
  {
    return KeyPair::from_seed(Bytes(32, b));
  }

  struct SocketPair
  {
    int fds[2] = {-1, -1};
    SocketPair()
    {
      REQUIRE(::socketpair(AF_UNIX, SOCK_STREAM, 0, fds) == 0);
    }
    ~SocketPair()
    {
      ::close(fds[0]);
      ::close(fds[1]);
    }
  };
}

TEST_CASE("envelope layout")
{
  const Bytes payload{0xaa, 0xbb};
  CHECK(
    to_hex(make_request(MessageKind::latest_block, payload)) ==
    "40" "0000000000000004" "00000002" "aabb");
  CHECK(to_hex(ok_response(payload)) == "42" "0000000000000000" "00000002" "aabb");
  CHECK(to_hex(error_response("no")) == "42" "0000000000000001" "00000002" "6e6f");

  auto [kind, body] = parse_request(make_request(MessageKind::relay_submit, payload));
  CHECK(kind == MessageKind::relay_submit);
  CHECK(body == payload);
  CHECK(unwrap_response(ok_response(payload)) == payload);
  CHECK_THROWS_AS(unwrap_response(error_response("boom")), RemoteError);
  CHECK_THROWS(parse_request(make_request(static_cast<MessageKind>(9), payload)));
}

TEST_CASE("frames carry a 4-byte big-endian length")
{
  SocketPair p;
  write_frame(p.fds[0], Bytes{1, 2, 3});
  std::uint8_t raw[7];
  REQUIRE(::read(p.fds[1], raw, 7) == 7);
  CHECK(to_hex(ByteView(raw, 7)) == "00000003010203");

  write_frame(p.fds[0], Bytes{});
  write_frame(p.fds[0], Bytes(1000, 7));
  CHECK(read_frame(p.fds[1])->empty());
  CHECK(read_frame(p.fds[1])->size() == 1000);

  ::shutdown(p.fds[0], SHUT_WR);
  CHECK_FALSE(read_frame(p.fds[1]));
}

TEST_CASE("oversized and torn frames are refused")
{
  SocketPair p;
  const std::uint8_t huge[4] = {0xff, 0xff, 0xff, 0xff};
  REQUIRE(::write(p.fds[0], huge, 4) == 4);
  CHECK_THROWS_AS(read_frame(p.fds[1]), TransportError);

  SocketPair q;
  const std::uint8_t torn[2] = {0, 0};
  REQUIRE(::write(q.fds[0], torn, 2) == 2);
  ::shutdown(q.fds[0], SHUT_WR);
  CHECK_THROWS_AS(read_frame(q.fds[1]), TransportError);
}

TEST_CASE("addresses")
{
  auto a = parse_address("10.0.0.1:7000");
  CHECK(a.host == "10.0.0.1");
  CHECK(a.port == 7000);
  auto b = parse_address(":81");
  CHECK(b.host == "127.0.0.1");
  CHECK(b.port == 81);
  CHECK_THROWS(parse_address("nohost"));
}

TEST_CASE("ledger, auditor and client over TCP")
{
  LedgerOptions o;
  o.block_events = 1;
  Ledger ledger(seeded(9), o);
  LocalLedger local(ledger);
  TcpServer ledger_server({"127.0.0.1", 0}, ledger_handler(local));

  auto ledger_link = std::make_shared<TcpTransport>(Address{"127.0.0.1", ledger_server.port()});
  RemoteLedger remote(ledger_link);

  Auditor auditor(seeded(20), seeded(9).public_key(), AuditorMode::proof_stream);
  auditor.set_relay(&remote);
  TcpServer auditor_server({"127.0.0.1", 0}, auditor_handler(auditor));
  RemoteAuditor remote_auditor(
    std::make_shared<TcpTransport>(Address{"127.0.0.1", auditor_server.port()}));

  AccessClient client(remote, seeded(9).public_key(), &remote_auditor);
  auto owner = seeded(1);
  auto alice = seeded(2);
  GroupId g{owner.public_key(), "g"};

  auditor.sync(remote);
  CHECK_FALSE(client.refresh());
  auto out = client.add_member(owner, {}, g, Role::leader(), alice.public_key());
  REQUIRE(out.accepted());
  auditor.sync(remote);
  CHECK_FALSE(client.refresh());
  CHECK(client.trusted_block()->height == 1);

  auto cert = std::get<MemberCertificate>(out.request.event);
  CHECK(client.verify_member({cert}, g, Role::leader(), alice.public_key()).verdict ==
        Membership::is_member);
  CHECK(client.confirm_inclusion().empty());

  auto refused = client.add_member(alice, {}, g, Role::member(), seeded(3).public_key());
  REQUIRE(refused.rejection);
  CHECK(refused.assessment->verdict == RefusalVerdict::justified);

  // Relaying through the auditor over the network.
  auto relayed = remote_auditor.relay_submit(
    {issue_certificate(owner, seeded(3).public_key(), g, Role::member(), ledger.latest_t()), {}});
  CHECK(std::holds_alternative<ProofOfDelivery>(relayed));

  // Remote errors surface as RemoteError, not as answers.
  CHECK_THROWS_AS(remote.query(Digest{}, 999), RemoteError);
  CHECK_FALSE(remote.block_at(999));
  CHECK(client.alarms().empty());

  ledger_server.stop();
  CHECK_THROWS_AS(remote.latest_block(), TransportError);
  auto alarm = client.refresh();
  REQUIRE(alarm);
  CHECK(alarm->kind == AlarmKind::no_response);
  CHECK_FALSE(verify_evidence(*alarm, seeded(9).public_key()));
}
