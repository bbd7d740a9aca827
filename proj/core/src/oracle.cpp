// Copyright (c) The revledger authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "revledger/oracle.hpp"

#include "revledger/encoding.hpp"

#include <fstream>
#include <iterator>

namespace revledger
{
  GlobalHistory read_history(const std::filesystem::path& data_dir)
  {
    GlobalHistory history;
    std::ifstream in(data_dir / "events.log", std::ios::binary);
    if (!in)
    {
      return history;
    }
    const Bytes data(
      (std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    std::size_t pos = 0;
    while (data.size() - pos >= 4)
    {
      const std::size_t len = (std::size_t(data[pos]) << 24) |
        (std::size_t(data[pos + 1]) << 16) | (std::size_t(data[pos + 2]) << 8) |
        std::size_t(data[pos + 3]);
      if (data.size() - pos - 4 < len)
      {
        break;
      }
      const ByteView record(data.data() + pos + 4, len);
      pos += 4 + len;

      if (Decoder::peek_tag(record) != TypeTag::log_event)
      {
        continue;
      }
      Decoder d(record, TypeTag::log_event);
      LoggedEvent e;
      e.t = d.u64();
      e.event = decode_event(d.field());
      if (d.flag())
      {
        e.authorization = decode_authorization(d.field());
      }
      d.finish();
      if (!history.empty() && e.t <= history.back().t)
      {
        throw std::runtime_error("event log is not in increasing t");
      }
      history.push_back(std::move(e));
    }
    return history;
  }

  const RoleAssignment::Grant* RoleAssignment::grant_of(const Key& k) const
  {
    static const Grant owner_grant{};
    auto it = grants_.find(k);
    if (it != grants_.end())
    {
      return it->second ? &*it->second : nullptr;
    }
    const auto& [group, role, key] = k;
    if (role.is_leader() && key == group.owner)
    {
      return &owner_grant;
    }
    return nullptr;
  }

  bool RoleAssignment::lineage_intact(const std::vector<Digest>& lineage) const
  {
    for (const auto& h : lineage)
    {
      auto revs = cert_revocations_.find(h);
      if (revs == cert_revocations_.end())
      {
        continue;
      }
      const auto& cert = certs_.at(h);
      for (const auto& r : revs->second)
      {
        if (r.issuer == cert.issuer || (r.scope && *r.scope == cert.group))
        {
          return false;
        }
      }
    }
    return true;
  }

  bool RoleAssignment::valid_leader(const GroupId& group, const PublicKey& key) const
  {
    const auto* g = grant_of({group, Role::leader(), key});
    return g != nullptr && lineage_intact(g->lineage);
  }

  bool RoleAssignment::permitted(const GroupId& group, const PublicKey& issuer) const
  {
    auto s = suspended_.find(group);
    if (s != suspended_.end() && s->second != issuer)
    {
      return false;
    }
    return valid_leader(group, issuer);
  }

  bool RoleAssignment::step(const LoggedEvent& e)
  {
    last_t_ = e.t;
    const bool authorized = std::visit(
      [&](const auto& ev) -> bool {
        using T = std::decay_t<decltype(ev)>;
        if constexpr (std::is_same_v<T, MemberCertificate>)
        {
          if (!permitted(ev.group, ev.issuer))
          {
            return false;
          }
          const auto h = certificate_hash(ev);
          Grant g;
          g.lineage.push_back(h);
          const auto* issuer_grant = grant_of({ev.group, Role::leader(), ev.issuer});
          g.lineage.insert(
            g.lineage.end(),
            issuer_grant->lineage.begin(),
            issuer_grant->lineage.end());
          certs_[h] = CertInfo{ev.issuer, ev.group};
          grants_[{ev.group, ev.role, ev.subject}] = std::move(g);
          return true;
        }
        else if constexpr (std::is_same_v<T, MemberRevocation>)
        {
          if (!permitted(ev.group, ev.issuer))
          {
            return false;
          }
          grants_[{ev.group, ev.role, ev.subject}] = std::nullopt;
          return true;
        }
        else if constexpr (std::is_same_v<T, CertRevocation>)
        {
          CertRevocationRecord r{ev.issuer, std::nullopt};
          if (e.authorization && e.authorization->scope)
          {
            const auto& scope = *e.authorization->scope;
            if (!permitted(scope, ev.issuer))
            {
              return false;
            }
            r.scope = scope;
          }
          cert_revocations_[ev.cert_hash].push_back(std::move(r));
          return true;
        }
        else if constexpr (std::is_same_v<T, PreimageRevocation>)
        {
          // Only affects hierarchical chains.
          return true;
        }
        else if constexpr (std::is_same_v<T, SuspendEvent>)
        {
          if (suspended_.count(ev.group) != 0 || !valid_leader(ev.group, ev.issuer))
          {
            return false;
          }
          suspended_[ev.group] = ev.issuer;
          return true;
        }
        else
        {
          // The lock holder may always release it, even after losing its
          // own leadership.
          auto s = suspended_.find(ev.group);
          if (s == suspended_.end() || s->second != ev.issuer)
          {
            return false;
          }
          suspended_.erase(s);
          return true;
        }
      },
      e.event);
    if (!authorized)
    {
      ignored_.push_back(e.t);
    }
    return authorized;
  }

  bool RoleAssignment::has_role(
    const GroupId& group, const Role& role, const PublicKey& key) const
  {
    const auto* g = grant_of({group, role, key});
    return g != nullptr && lineage_intact(g->lineage);
  }

  std::optional<PublicKey> RoleAssignment::suspender(const GroupId& group) const
  {
    auto it = suspended_.find(group);
    if (it == suspended_.end())
    {
      return std::nullopt;
    }
    return it->second;
  }

  std::vector<std::tuple<GroupId, Role, PublicKey>> RoleAssignment::known_triples()
    const
  {
    std::vector<Key> out;
    out.reserve(grants_.size());
    for (const auto& [k, g] : grants_)
    {
      out.push_back(k);
    }
    return out;
  }

  RoleAssignment replay(const GlobalHistory& history)
  {
    RoleAssignment a;
    for (const auto& e : history)
    {
      a.step(e);
    }
    return a;
  }

  bool role_at(
    const GlobalHistory& history,
    SequenceNumber t_query,
    const GroupId& group,
    const Role& role,
    const PublicKey& key)
  {
    RoleAssignment a;
    for (const auto& e : history)
    {
      if (e.t > t_query)
      {
        break;
      }
      a.step(e);
    }
    return a.has_role(group, role, key);
  }
}
