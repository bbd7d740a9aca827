// Copyright (c) The revledger authors. All rights reserved.
// Licensed under the Apache 2.0 License.
#pragma once

#include "revledger/client.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace revledger::harness
{
  /// Reads a binary key file, or creates one with a fresh key. The public
  /// half is written next to it as `<file>.pub` in hex.
  KeyPair load_or_create_key(const std::filesystem::path& file);
  KeyPair load_key(const std::filesystem::path& file);

  /// A client's local state, one directory:
  ///
  ///   keys/<name>.key    binary key pair; keys/<name>.pub the public half
  ///   groups.json        group name -> owner key
  ///   chains.json        known chains per (group, role, subject)
  ///   utp.pub            the ledger's key
  ///   trusted_block      last block cross-checked with an auditor
  ///   alarms/            evidence of every alarm raised
  class Keystore
  {
  public:
    explicit Keystore(std::filesystem::path dir);

    const std::filesystem::path& dir() const
    {
      return dir_;
    }

    KeyPair create_key(const std::string& name, bool overwrite = false);
    KeyPair key(const std::string& name) const;
    /// A key name from this store, or a public key in hex.
    PublicKey resolve(const std::string& name_or_hex) const;
    std::optional<std::string> name_of(const PublicKey& k) const;

    void add_group(const std::string& name, const PublicKey& owner);
    /// A recorded group, or (owner, name) if an owner is given.
    GroupId group(const std::string& name, const std::string& owner = "") const;

    void set_chain(const GroupId& g, const Role& r, const PublicKey& k, const MemberChain& chain);
    /// Empty if unknown, which is also the owner's leader chain.
    MemberChain chain(const GroupId& g, const Role& r, const PublicKey& k) const;

    std::optional<PublicKey> utp() const;
    void set_utp(const PublicKey& k);
    std::optional<Block> trusted_block() const;
    void set_trusted_block(const Block& b);

    /// Writes the alarm's canonical encoding and returns the file.
    std::filesystem::path save_alarm(const Alarm& a);

  private:
    std::filesystem::path key_file(const std::string& name) const;

    std::filesystem::path dir_;
  };
}
