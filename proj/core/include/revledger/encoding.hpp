// Copyright (c) The revledger authors. All rights reserved.
// Licensed under the Apache 2.0 License.
#pragma once

#include "revledger/bytes.hpp"
#include "revledger/crypto.hpp"

#include <optional>
#include <stdexcept>
#include <string>

namespace revledger
{
  /// Leading byte of every canonical encoding. Values are part of the wire and
  /// hashing format and must never be reused.
  enum class TypeTag : std::uint8_t
  {
    public_key = 0x01,
    key_pair = 0x02,
    group_id = 0x03,
    signature = 0x04,

    member_certificate = 0x10,
    member_revocation = 0x11,
    cert_revocation = 0x12,
    preimage_revocation = 0x13,
    suspend = 0x14,
    resume = 0x15,
    hier_certificate = 0x16,
    member_chain = 0x17,
    hier_chain = 0x18,
    member_index = 0x19,
    suspension_index = 0x1a,

    proof = 0x20,
    update_proof = 0x21,
    compact_update = 0x22,

    block = 0x30,
    proof_of_delivery = 0x31,
    rejection = 0x32,
    authorization = 0x33,
    log_event = 0x34,
    log_block = 0x35,
    endorsement = 0x36,
    timed_event = 0x37,
    stored_authorization = 0x38,
    submit_request = 0x39,

    request = 0x40,
    response = 0x41,
    envelope = 0x42,
    item_list = 0x43,
    query = 0x44,

    alarm = 0x50,
    auditor_state = 0x51,
  };

  class DecodeError : public std::runtime_error
  {
  public:
    using std::runtime_error::runtime_error;
  };

  /// Tag-length-value writer. A value is a type tag followed by its fields in
  /// declaration order; byte fields carry a 4-byte big-endian length prefix,
  /// integers are 8-byte big-endian with no prefix.
  class Encoder
  {
  public:
    explicit Encoder(TypeTag tag)
    {
      out_.push_back(static_cast<std::uint8_t>(tag));
    }

    Encoder& field(ByteView data);
    Encoder& field(std::string_view s)
    {
      return field(as_bytes(s));
    }
    Encoder& field(const Digest& d)
    {
      return field(d.view());
    }
    Encoder& field(const PublicKey& pk)
    {
      return field(pk.raw());
    }
    Encoder& field(const Signature& sig)
    {
      return field(sig.bytes);
    }
    Encoder& u64(std::uint64_t v);
    Encoder& flag(bool b)
    {
      return u64(b ? 1 : 0);
    }

    const Bytes& bytes() const
    {
      return out_;
    }
    Bytes take()
    {
      return std::move(out_);
    }

  private:
    Bytes out_;
  };

  class Decoder
  {
  public:
    /// Throws DecodeError unless `data` starts with `tag`.
    Decoder(ByteView data, TypeTag tag);

    ByteView field();
    std::string string_field();
    Digest digest_field();
    PublicKey key_field();
    Signature signature_field();
    std::uint64_t u64();
    bool flag();

    bool at_end() const
    {
      return pos_ == data_.size();
    }
    /// Throws DecodeError if bytes remain.
    void finish() const;

    static TypeTag peek_tag(ByteView data);

  private:
    void need(std::size_t n) const;

    ByteView data_;
    std::size_t pos_ = 0;
  };

  void put_u64(Bytes& out, std::uint64_t v);
  void put_u32(Bytes& out, std::uint32_t v);
  std::uint64_t get_u64(const std::uint8_t* p);
  std::uint32_t get_u32(const std::uint8_t* p);
}
