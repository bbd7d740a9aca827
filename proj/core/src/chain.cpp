// Copyright (c) The revledger authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "revledger/chain.hpp"

namespace revledger
{
  namespace
  {
    std::optional<HistoryEntry> member_revocation_in(
      const std::vector<HistoryEntry>& entries,
      SequenceNumber after,
      SequenceNumber up_to)
    {
      for (const auto& e : entries)
      {
        if (
          e.t > after && e.t <= up_to &&
          std::holds_alternative<MemberRevocation>(e.event))
        {
          return e;
        }
      }
      return std::nullopt;
    }

    std::optional<HistoryEntry> cert_revocation_of(
      HistorySource& source,
      const MemberCertificate& cert,
      const GroupId& group,
      SequenceNumber as_of)
    {
      for (const auto& e : source.entries(certificate_hash(cert)))
      {
        const auto* r = std::get_if<CertRevocation>(&e.event);
        if (e.t >= as_of || r == nullptr)
        {
          continue;
        }
        if (r->issuer == cert.issuer)
        {
          return e;
        }
        auto auth = source.authorization(e.hash);
        if (auth && auth->scope && *auth->scope == group)
        {
          return e;
        }
      }
      return std::nullopt;
    }
  }

  std::string to_string(ChainStatus s)
  {
    switch (s)
    {
      case ChainStatus::success:
        return "Success";
      case ChainStatus::invalid:
        return "Invalid";
      case ChainStatus::not_registered:
        return "CertificateNotRegistered";
      case ChainStatus::revoked:
        return "Revoked";
    }
    return "Unknown";
  }

  ChainDecision evaluate_chain(
    HistorySource& source,
    const MemberChain& chain,
    const GroupId& group,
    const Role& role,
    const PublicKey& subject,
    SequenceNumber as_of,
    SignatureCache* cache)
  {
    ChainDecision d;
    d.general = general_checks(chain, group.owner, subject, group, role, cache);
    if (!d.general)
    {
      d.status = ChainStatus::invalid;
      d.position = d.general.position;
      return d;
    }

    const auto leader = Role::leader();
    SequenceNumber prev_t = 0;
    for (std::size_t i = 0; i < chain.size(); ++i)
    {
      const auto& c = chain[i];
      const auto own_hash = certificate_hash(c);
      std::optional<SequenceNumber> t_i;
      for (const auto& e : source.entries(member_index(group, c.role, c.subject)))
      {
        if (e.t < as_of && e.hash == own_hash)
        {
          t_i = e.t;
          break;
        }
      }
      if (!t_i)
      {
        d.status = ChainStatus::not_registered;
        d.position = i;
        return d;
      }

      auto rev = member_revocation_in(
        source.entries(member_index(group, leader, c.issuer)), prev_t, *t_i);
      if (!rev)
      {
        rev = cert_revocation_of(source, c, group, as_of);
      }
      if (rev)
      {
        d.status = ChainStatus::revoked;
        d.position = i;
        d.revocation = std::move(rev);
        return d;
      }
      prev_t = *t_i;
    }

    // Revocations at t == as_of are excluded by the interval bound below.
    if (as_of > 0)
    {
      auto rev = member_revocation_in(
        source.entries(member_index(group, role, subject)), prev_t, as_of - 1);
      if (rev)
      {
        d.status = ChainStatus::revoked;
        d.position = chain.size();
        d.revocation = std::move(rev);
      }
    }
    return d;
  }
}
