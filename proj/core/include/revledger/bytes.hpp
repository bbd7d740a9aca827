// Copyright (c) The revledger authors. All rights reserved.
// Licensed under the Apache 2.0 License.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace revledger
{
  using Bytes = std::vector<std::uint8_t>;
  using ByteView = std::span<const std::uint8_t>;

  /// Lowercase hex, no prefix.
  std::string to_hex(ByteView data);

  /// Parses lowercase or uppercase hex. Throws std::invalid_argument on odd
  /// length or non-hex characters.
  Bytes from_hex(std::string_view hex);

  inline ByteView as_bytes(std::string_view s)
  {
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
  }

  inline void append(Bytes& out, ByteView data)
  {
    out.insert(out.end(), data.begin(), data.end());
  }
}
