// Copyright (c) The revledger authors. All rights reserved.
// Licensed under the Apache 2.0 License.
#pragma once

#include "revledger/bytes.hpp"

#include <array>
#include <compare>
#include <cstring>
#include <functional>
#include <stdexcept>
#include <string>

namespace revledger
{
  /// A SHA-256 output. Comparisons are byte equality.
  struct Digest
  {
    static constexpr std::size_t size = 32;
    std::array<std::uint8_t, size> bytes{};

    static Digest zero()
    {
      return {};
    }
    static Digest from_view(ByteView view);
    static Digest from_hex(std::string_view hex);

    bool is_zero() const;
    std::string hex() const
    {
      return to_hex(bytes);
    }
    ByteView view() const
    {
      return bytes;
    }

    /// Bit `i` of the digest, most significant bit of byte 0 first.
    int bit(std::size_t i) const
    {
      return (bytes[i / 8] >> (7 - (i % 8))) & 1;
    }

    auto operator<=>(const Digest&) const = default;
  };

  /// Index of the first bit where `a` and `b` differ, or 256 if equal.
  std::size_t first_differing_bit(const Digest& a, const Digest& b);

  Digest hash(ByteView data);

  /// Incremental SHA-256 over several pieces; equivalent to hashing their
  /// concatenation.
  class Hasher
  {
  public:
    /// Opaque SHA-256 context storage.
    using State = std::array<std::uint64_t, 16>;

    Hasher();
    Hasher(const Hasher&) = delete;
    Hasher& operator=(const Hasher&) = delete;

    Hasher& update(ByteView data);
    Hasher& update(std::uint8_t byte)
    {
      return update(ByteView(&byte, 1));
    }
    Hasher& update(const Digest& d)
    {
      return update(d.view());
    }
    Hasher& update_u64(std::uint64_t v);
    Digest finish();

  private:
    State state_;
  };

  class InvalidKey : public std::runtime_error
  {
  public:
    using std::runtime_error::runtime_error;
  };

  enum class SignatureScheme : std::uint8_t
  {
    ed25519 = 0x01,
  };

  /// Signature-verification key. The first byte of the raw form is the
  /// scheme tag so other schemes can be added without changing identities.
  class PublicKey
  {
  public:
    static constexpr std::size_t ed25519_size = 32;

    PublicKey() = default;

    /// Parses the raw tagged form. Throws InvalidKey.
    static PublicKey from_raw(ByteView raw);
    static PublicKey from_hex(std::string_view hex);

    SignatureScheme scheme() const
    {
      return scheme_;
    }
    ByteView key_bytes() const
    {
      return key_;
    }
    /// Scheme tag followed by key bytes.
    Bytes raw() const;
    std::string hex() const
    {
      return to_hex(raw());
    }
    bool empty() const
    {
      return key_.empty();
    }

    auto operator<=>(const PublicKey&) const = default;

  private:
    SignatureScheme scheme_ = SignatureScheme::ed25519;
    Bytes key_;
  };

  struct Signature
  {
    Bytes bytes;
    auto operator<=>(const Signature&) const = default;
  };

  class KeyPair
  {
  public:
    static constexpr std::size_t seed_size = 32;

    static KeyPair generate();
    /// Deterministic key derivation; the same seed always yields the same
    /// pair.
    static KeyPair from_seed(ByteView seed);

    const PublicKey& public_key() const
    {
      return public_;
    }
    ByteView seed() const
    {
      return seed_;
    }

    Signature sign(ByteView msg) const;

    /// Canonical encoding, for key files.
    Bytes encode() const;
    static KeyPair decode(ByteView data);

  private:
    PublicKey public_;
    std::array<std::uint8_t, seed_size> seed_{};
    std::array<std::uint8_t, 64> secret_{};
  };

  /// Returns false for any bad signature; never throws.
  bool verify(const PublicKey& pk, ByteView msg, const Signature& sig);

  Bytes random_bytes(std::size_t n);
}

template <>
struct std::hash<revledger::Digest>
{
  std::size_t operator()(const revledger::Digest& d) const noexcept
  {
    std::size_t h;
    std::memcpy(&h, d.bytes.data(), sizeof(h));
    return h;
  }
};
