// Copyright (c) The revledger authors. All rights reserved.
// Licensed under the Apache 2.0 License.
#pragma once

#include "revledger/records.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <tuple>
#include <vector>

namespace revledger
{
  /// One accepted event as sequenced by the ledger, with the authorization
  /// it was stored with.
  struct LoggedEvent
  {
    SequenceNumber t = 0;
    Event event;
    std::optional<StoredAuthorization> authorization;
  };

  using GlobalHistory = std::vector<LoggedEvent>;

  /// Reads the accepted events from a ledger data directory. Blocks are
  /// skipped and a torn trailing record is ignored. Throws std::runtime_error
  /// if sequence numbers do not strictly increase.
  GlobalHistory read_history(const std::filesystem::path& data_dir);

  /// Ground-truth role assignment by brute-force replay of the global
  /// history. Every owner leads each of its groups from t = 0. An event
  /// counts only if its issuer is a leader right before it and no other
  /// key holds the group suspended; a resume counts if its issuer holds the
  /// suspension.
  class RoleAssignment
  {
  public:
    /// Applies one event; returns whether it was authorized.
    bool step(const LoggedEvent& e);

    bool has_role(const GroupId& group, const Role& role, const PublicKey& key) const;

    /// Active suspender of `group`, if any.
    std::optional<PublicKey> suspender(const GroupId& group) const;

    SequenceNumber last_t() const
    {
      return last_t_;
    }
    /// Events that were ignored as unauthorized.
    const std::vector<SequenceNumber>& ignored() const
    {
      return ignored_;
    }

    /// Every (group, role, key) some accepted add or revoke named.
    std::vector<std::tuple<GroupId, Role, PublicKey>> known_triples() const;

  private:
    using Key = std::tuple<GroupId, Role, PublicKey>;

    struct Grant
    {
      /// Certificates the role rests on: its own and its issuer's, up to the
      /// owner. Empty for an owner's implicit leadership.
      std::vector<Digest> lineage;
    };

    struct CertInfo
    {
      PublicKey issuer;
      GroupId group;
    };

    struct CertRevocationRecord
    {
      PublicKey issuer;
      /// Set only if the revoker led this group when revoking.
      std::optional<GroupId> scope;
    };

    /// Current grant, or nullptr if the role is not held.
    const Grant* grant_of(const Key& k) const;
    bool lineage_intact(const std::vector<Digest>& lineage) const;
    bool valid_leader(const GroupId& group, const PublicKey& key) const;
    bool permitted(const GroupId& group, const PublicKey& issuer) const;

    /// Explicit state; a missing key means "never touched".
    std::map<Key, std::optional<Grant>> grants_;
    std::map<Digest, CertInfo> certs_;
    std::map<Digest, std::vector<CertRevocationRecord>> cert_revocations_;
    std::map<GroupId, PublicKey> suspended_;
    SequenceNumber last_t_ = 0;
    std::vector<SequenceNumber> ignored_;
  };

  RoleAssignment replay(const GlobalHistory& history);

  /// Role assignment after every event with t <= `t_query`.
  bool role_at(
    const GlobalHistory& history,
    SequenceNumber t_query,
    const GroupId& group,
    const Role& role,
    const PublicKey& key);
}
