// Copyright (c) The revledger authors. All rights reserved.
// Licensed under the Apache 2.0 License.
#pragma once

#include "revledger/bytes.hpp"
#include "revledger/crypto.hpp"

#include <filesystem>

namespace revledger
{
  /// Fresh directory under the system temp dir, removed on destruction.
  class TempDir
  {
  public:
    TempDir() :
      path_(
        std::filesystem::temp_directory_path() /
        ("revledger-" + to_hex(random_bytes(8))))
    {
      std::filesystem::create_directories(path_);
    }

    ~TempDir()
    {
      std::error_code ec;
      std::filesystem::remove_all(path_, ec);
    }

    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const
    {
      return path_;
    }

  private:
    std::filesystem::path path_;
  };
}
