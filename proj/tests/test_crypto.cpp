// Copyright (c) The revledger authors. All rights reserved.
// Licensed under the Apache 2.0 License.
#include "revledger/crypto.hpp"
#include "revledger/encoding.hpp"

#include "doctest.h"

using namespace revledger;

TEST_CASE("sha256 known answers")
{
  CHECK(
    hash(as_bytes("abc")).hex() ==
    "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(
    hash(Bytes{}).hex() ==
    "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("incremental hashing equals one-shot hashing")
{
  Hasher outer;
  outer.update(as_bytes("ab"));
  {
    // A nested hasher must not disturb the outer one.
    Hasher inner;
    inner.update(as_bytes("zzz"));
    CHECK(inner.finish() == hash(as_bytes("zzz")));
  }
  outer.update(as_bytes("c"));
  CHECK(outer.finish() == hash(as_bytes("abc")));

  Bytes eight;
  put_u64(eight, 0x0102030405060708ull);
  CHECK(Hasher().update_u64(0x0102030405060708ull).finish() == hash(eight));
}

TEST_CASE("digest bits are most significant first")
{
  Digest d;
  d.bytes[0] = 0x80;
  d.bytes[1] = 0x01;
  CHECK(d.bit(0) == 1);
  CHECK(d.bit(1) == 0);
  CHECK(d.bit(15) == 1);
  Digest e = d;
  CHECK(first_differing_bit(d, e) == 256);
  e.bytes[1] = 0x03;
  CHECK(first_differing_bit(d, e) == 14);
}

TEST_CASE("ed25519 matches the RFC 8032 test 1 vector")
{
  auto kp = KeyPair::from_seed(
    from_hex("9d61b19deffd5a60ba844af492ec2cc44449c5697b326919703bac031cae7f60"));
  CHECK(
    to_hex(kp.public_key().key_bytes()) ==
    "d75a980182b10ab7d54bfed3c964073a0ee172f3daa62325af021a68f707511a");
  auto sig = kp.sign({});
  CHECK(
    to_hex(sig.bytes) ==
    "e5564300c360ac729086e2cc806e828a84877f1eb8e5d974d873e065224901555fb8821590"
    "a33bacc61e39701cf9b46bd25bf5f0595bbe24655141438e7a100b");
  CHECK(verify(kp.public_key(), {}, sig));
}

TEST_CASE("signatures reject tampering")
{
  auto kp = KeyPair::generate();
  auto other = KeyPair::generate();
  auto msg = as_bytes("revoke alice");
  auto sig = kp.sign(msg);
  CHECK(verify(kp.public_key(), msg, sig));
  CHECK_FALSE(verify(other.public_key(), msg, sig));
  CHECK_FALSE(verify(kp.public_key(), as_bytes("revoke alicf"), sig));
  auto bad = sig;
  bad.bytes[3] ^= 0x10;
  CHECK_FALSE(verify(kp.public_key(), msg, bad));
  bad.bytes.pop_back();
  CHECK_FALSE(verify(kp.public_key(), msg, bad));
}

TEST_CASE("public keys carry a scheme tag")
{
  auto kp = KeyPair::generate();
  auto raw = kp.public_key().raw();
  REQUIRE(raw.size() == 33);
  CHECK(raw[0] == 0x01);
  CHECK(PublicKey::from_raw(raw) == kp.public_key());
  raw[0] = 0x02;
  CHECK_THROWS_AS(PublicKey::from_raw(raw), InvalidKey);
  CHECK_THROWS_AS(PublicKey::from_raw(Bytes{0x01, 0x02}), InvalidKey);
  CHECK_THROWS_AS(PublicKey::from_hex("zz"), InvalidKey);
}

TEST_CASE("key pairs round trip through their encoding")
{
  auto kp = KeyPair::generate();
  auto back = KeyPair::decode(kp.encode());
  CHECK(back.public_key() == kp.public_key());
  auto enc = kp.encode();
  enc[10] ^= 1;
  CHECK_THROWS(KeyPair::decode(enc));
}

TEST_CASE("decoder rejects malformed input")
{
  auto enc = Encoder(TypeTag::proof).field(as_bytes("xy")).u64(1).take();
  {
    Decoder d(enc, TypeTag::proof);
    CHECK(d.string_field() == "xy");
    CHECK(d.flag());
    CHECK_NOTHROW(d.finish());
  }
  CHECK_THROWS_AS(Decoder(enc, TypeTag::block), DecodeError);
  {
    auto bad = enc;
    bad.push_back(0);
    Decoder d(bad, TypeTag::proof);
    d.field();
    d.u64();
    CHECK_THROWS_AS(d.finish(), DecodeError);
  }
  {
    auto flag2 = Encoder(TypeTag::proof).u64(2).take();
    Decoder d(flag2, TypeTag::proof);
    CHECK_THROWS_AS(d.flag(), DecodeError);
  }
  {
    auto lying = Encoder(TypeTag::proof).take();
    put_u32(lying, 100);
    Decoder d(lying, TypeTag::proof);
    CHECK_THROWS_AS(d.field(), DecodeError);
  }
}
