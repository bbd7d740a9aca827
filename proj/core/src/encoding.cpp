// Copyright (c) The revledger authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "revledger/encoding.hpp"

#include <limits>

namespace revledger
{
  void put_u64(Bytes& out, std::uint64_t v)
  {
    for (int shift = 56; shift >= 0; shift -= 8)
    {
      out.push_back(static_cast<std::uint8_t>(v >> shift));
    }
  }

  void put_u32(Bytes& out, std::uint32_t v)
  {
    for (int shift = 24; shift >= 0; shift -= 8)
    {
      out.push_back(static_cast<std::uint8_t>(v >> shift));
    }
  }

  std::uint64_t get_u64(const std::uint8_t* p)
  {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
    {
      v = (v << 8) | p[i];
    }
    return v;
  }

  std::uint32_t get_u32(const std::uint8_t* p)
  {
    return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
      (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
  }

  Encoder& Encoder::field(ByteView data)
  {
    if (data.size() > std::numeric_limits<std::uint32_t>::max())
    {
      throw std::length_error("field exceeds 4 GiB");
    }
    put_u32(out_, static_cast<std::uint32_t>(data.size()));
    append(out_, data);
    return *this;
  }

  Encoder& Encoder::u64(std::uint64_t v)
  {
    put_u64(out_, v);
    return *this;
  }

  Decoder::Decoder(ByteView data, TypeTag tag) : data_(data)
  {
    if (data_.empty() || data_[0] != static_cast<std::uint8_t>(tag))
    {
      throw DecodeError(
        "expected type tag " + std::to_string(static_cast<int>(tag)));
    }
    pos_ = 1;
  }

  TypeTag Decoder::peek_tag(ByteView data)
  {
    if (data.empty())
    {
      throw DecodeError("empty encoding");
    }
    return static_cast<TypeTag>(data[0]);
  }

  void Decoder::need(std::size_t n) const
  {
    if (data_.size() - pos_ < n)
    {
      throw DecodeError("truncated encoding");
    }
  }

  ByteView Decoder::field()
  {
    need(4);
    const auto len = get_u32(data_.data() + pos_);
    pos_ += 4;
    need(len);
    auto v = data_.subspan(pos_, len);
    pos_ += len;
    return v;
  }

  std::string Decoder::string_field()
  {
    auto v = field();
    return {reinterpret_cast<const char*>(v.data()), v.size()};
  }

  Digest Decoder::digest_field()
  {
    return Digest::from_view(field());
  }

  PublicKey Decoder::key_field()
  {
    try
    {
      return PublicKey::from_raw(field());
    }
    catch (const InvalidKey& e)
    {
      throw DecodeError(e.what());
    }
  }

  Signature Decoder::signature_field()
  {
    auto v = field();
    return Signature{Bytes(v.begin(), v.end())};
  }

  std::uint64_t Decoder::u64()
  {
    need(8);
    auto v = get_u64(data_.data() + pos_);
    pos_ += 8;
    return v;
  }

  bool Decoder::flag()
  {
    auto v = u64();
    if (v > 1)
    {
      throw DecodeError("flag must be 0 or 1");
    }
    return v == 1;
  }

  void Decoder::finish() const
  {
    if (!at_end())
    {
      throw DecodeError("trailing bytes after encoding");
    }
  }
}
