// Copyright (c) The revledger authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "revledger/crypto.hpp"

#include "revledger/encoding.hpp"

#include <algorithm>
#include <bit>
// The one-shot SHA256_* API is deprecated in OpenSSL 3 but avoids the EVP
// dispatch, which costs more than hashing a 65-byte node.
#define OPENSSL_SUPPRESS_DEPRECATED
#include <openssl/sha.h>
#include <sodium.h>
#include <stdexcept>
#include <vector>

namespace revledger
{
  namespace
  {
    void ensure_sodium()
    {
      static const bool ready = [] {
        if (sodium_init() < 0)
        {
          throw std::runtime_error("libsodium initialisation failed");
        }
        return true;
      }();
      (void)ready;
    }
  }

  std::string to_hex(ByteView data)
  {
    static constexpr char digits[] = "0123456789abcdef";
    std::string s;
    s.reserve(data.size() * 2);
    for (auto b : data)
    {
      s.push_back(digits[b >> 4]);
      s.push_back(digits[b & 0xf]);
    }
    return s;
  }

  Bytes from_hex(std::string_view hex)
  {
    if (hex.size() % 2 != 0)
    {
      throw std::invalid_argument("hex string has odd length");
    }
    auto nibble = [](char c) -> int {
      if (c >= '0' && c <= '9')
        return c - '0';
      if (c >= 'a' && c <= 'f')
        return c - 'a' + 10;
      if (c >= 'A' && c <= 'F')
        return c - 'A' + 10;
      throw std::invalid_argument("invalid hex character");
    };
    Bytes out(hex.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i)
    {
      out[i] = static_cast<std::uint8_t>(
        (nibble(hex[2 * i]) << 4) | nibble(hex[2 * i + 1]));
    }
    return out;
  }

  Digest Digest::from_view(ByteView view)
  {
    if (view.size() != size)
    {
      throw DecodeError("digest must be 32 bytes");
    }
    Digest d;
    std::copy(view.begin(), view.end(), d.bytes.begin());
    return d;
  }

  Digest Digest::from_hex(std::string_view hex)
  {
    return from_view(revledger::from_hex(hex));
  }

  bool Digest::is_zero() const
  {
    return std::all_of(bytes.begin(), bytes.end(), [](auto b) { return b == 0; });
  }

  std::size_t first_differing_bit(const Digest& a, const Digest& b)
  {
    for (std::size_t i = 0; i < Digest::size; ++i)
    {
      const std::uint8_t x = a.bytes[i] ^ b.bytes[i];
      if (x != 0)
      {
        return i * 8 + static_cast<std::size_t>(std::countl_zero(x));
      }
    }
    return Digest::size * 8;
  }

  static_assert(sizeof(SHA256_CTX) <= sizeof(Hasher::State));

  Hasher::Hasher()
  {
    SHA256_Init(reinterpret_cast<SHA256_CTX*>(state_.data()));
  }

  Hasher& Hasher::update(ByteView data)
  {
    SHA256_Update(reinterpret_cast<SHA256_CTX*>(state_.data()), data.data(), data.size());
    return *this;
  }

  Hasher& Hasher::update_u64(std::uint64_t v)
  {
    std::uint8_t b[8];
    for (int i = 0; i < 8; ++i)
    {
      b[i] = static_cast<std::uint8_t>(v >> (56 - 8 * i));
    }
    return update(ByteView(b, 8));
  }

  Digest Hasher::finish()
  {
    Digest d;
    SHA256_Final(d.bytes.data(), reinterpret_cast<SHA256_CTX*>(state_.data()));
    return d;
  }

  Digest hash(ByteView data)
  {
    return Hasher().update(data).finish();
  }

  PublicKey PublicKey::from_raw(ByteView raw)
  {
    if (raw.empty())
    {
      throw InvalidKey("empty public key");
    }
    if (raw[0] != static_cast<std::uint8_t>(SignatureScheme::ed25519))
    {
      throw InvalidKey("unknown signature scheme tag");
    }
    if (raw.size() != 1 + ed25519_size)
    {
      throw InvalidKey("ed25519 public key must be 32 bytes");
    }
    PublicKey pk;
    pk.scheme_ = SignatureScheme::ed25519;
    pk.key_.assign(raw.begin() + 1, raw.end());
    return pk;
  }

  PublicKey PublicKey::from_hex(std::string_view hex)
  {
    try
    {
      return from_raw(revledger::from_hex(hex));
    }
    catch (const std::invalid_argument& e)
    {
      throw InvalidKey(e.what());
    }
  }

  Bytes PublicKey::raw() const
  {
    Bytes out;
    out.reserve(1 + key_.size());
    out.push_back(static_cast<std::uint8_t>(scheme_));
    append(out, key_);
    return out;
  }

  KeyPair KeyPair::generate()
  {
    ensure_sodium();
    std::array<std::uint8_t, seed_size> seed;
    randombytes_buf(seed.data(), seed.size());
    return from_seed(seed);
  }

  KeyPair KeyPair::from_seed(ByteView seed)
  {
    ensure_sodium();
    if (seed.size() != seed_size)
    {
      throw InvalidKey("key seed must be 32 bytes");
    }
    KeyPair kp;
    std::copy(seed.begin(), seed.end(), kp.seed_.begin());
    std::array<std::uint8_t, crypto_sign_PUBLICKEYBYTES> pk;
    crypto_sign_seed_keypair(pk.data(), kp.secret_.data(), kp.seed_.data());
    Bytes raw{static_cast<std::uint8_t>(SignatureScheme::ed25519)};
    append(raw, pk);
    kp.public_ = PublicKey::from_raw(raw);
    return kp;
  }

  Signature KeyPair::sign(ByteView msg) const
  {
    Signature sig;
    sig.bytes.resize(crypto_sign_BYTES);
    crypto_sign_detached(
      sig.bytes.data(), nullptr, msg.data(), msg.size(), secret_.data());
    return sig;
  }

  Bytes KeyPair::encode() const
  {
    return Encoder(TypeTag::key_pair).field(public_).field(seed_).take();
  }

  KeyPair KeyPair::decode(ByteView data)
  {
    Decoder d(data, TypeTag::key_pair);
    auto pk = d.key_field();
    auto seed = d.field();
    d.finish();
    auto kp = from_seed(seed);
    if (kp.public_key() != pk)
    {
      throw InvalidKey("key file public half does not match its seed");
    }
    return kp;
  }

  bool verify(const PublicKey& pk, ByteView msg, const Signature& sig)
  {
    ensure_sodium();
    if (pk.scheme() != SignatureScheme::ed25519 ||
        pk.key_bytes().size() != PublicKey::ed25519_size ||
        sig.bytes.size() != crypto_sign_BYTES)
    {
      return false;
    }
    return crypto_sign_verify_detached(
             sig.bytes.data(), msg.data(), msg.size(), pk.key_bytes().data()) ==
      0;
  }

  Bytes random_bytes(std::size_t n)
  {
    ensure_sodium();
    Bytes out(n);
    randombytes_buf(out.data(), n);
    return out;
  }
}
