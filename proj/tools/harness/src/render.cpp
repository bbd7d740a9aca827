// Copyright (c) The revledger authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "revledger/harness/render.hpp"

#include <iostream>

namespace revledger::harness
{
  using nlohmann::json;

  json render(const GroupId& g)
  {
    return {{"owner", g.owner.hex()}, {"name", g.name}};
  }

  namespace
  {
    json member_event(const MemberEvent& e)
    {
      return {
        {"issuer", e.issuer.hex()},
        {"subject", e.subject.hex()},
        {"group", render(e.group)},
        {"role", e.role.tag()},
        {"freshness", e.freshness},
      };
    }

    json lock_event(const GroupLockEvent& e)
    {
      return {
        {"issuer", e.issuer.hex()}, {"group", render(e.group)}, {"freshness", e.freshness}};
    }
  }

  json render(const Event& e)
  {
    json j = std::visit(
      [](const auto& ev) -> json {
        using T = std::decay_t<decltype(ev)>;
        if constexpr (std::is_same_v<T, MemberCertificate> || std::is_same_v<T, MemberRevocation>)
        {
          return member_event(ev);
        }
        else if constexpr (std::is_same_v<T, CertRevocation>)
        {
          return {
            {"issuer", ev.issuer.hex()},
            {"cert_hash", ev.cert_hash.hex()},
            {"freshness", ev.freshness}};
        }
        else if constexpr (std::is_same_v<T, PreimageRevocation>)
        {
          return {{"commitment", ev.commitment.hex()}, {"preimage", to_hex(ev.preimage)}};
        }
        else
        {
          return lock_event(ev);
        }
      },
      e);
    j["action"] = action_of(e);
    j["hash"] = event_hash(e).hex();
    return j;
  }

  json render(const MemberChain& chain)
  {
    json out = json::array();
    for (const auto& c : chain)
    {
      auto j = render(Event{c});
      j["cert_hash"] = certificate_hash(c).hex();
      out.push_back(std::move(j));
    }
    return out;
  }

  json render(const HierCertificate& c)
  {
    json j{
      {"issuer", c.issuer.hex()},
      {"subject", c.subject.hex()},
      {"auth", c.auth},
      {"cert_hash", certificate_hash(c).hex()},
    };
    if (c.validity)
    {
      j["not_before"] = c.validity->not_before;
      j["not_after"] = c.validity->not_after;
    }
    if (c.revocation_commitment)
    {
      j["revocation_commitment"] = c.revocation_commitment->hex();
    }
    return j;
  }

  json render(const Block& b)
  {
    return {
      {"height", b.height},
      {"hash", b.hash().hex()},
      {"prev", b.prev.hex()},
      {"root", b.root.hex()},
      {"t_latest", b.t_latest},
      {"t_utc", b.t_utc},
    };
  }

  json render(const ProofOfDelivery& p)
  {
    return {
      {"event_hash", p.event_hash.hex()},
      {"block_height", p.block_height},
      {"block_hash", p.block_hash.hex()},
      {"t_latest", p.t_latest},
      {"t_utc", p.t_utc},
    };
  }

  json render(const Rejection& r)
  {
    json j{
      {"reason", to_string(r.reason)},
      {"event_hash", r.event_hash.hex()},
      {"detail", r.detail},
      {"t_latest", r.t_latest},
    };
    if (r.blocking)
    {
      j["blocking"] = render(r.blocking->event);
      j["blocking"]["t"] = r.blocking->t;
    }
    return j;
  }

  json render(const Alarm& a)
  {
    json heights = json::array();
    for (const auto& b : a.evidence.blocks)
    {
      heights.push_back(b.height);
    }
    return {
      {"alarm", to_string(a.kind)},
      {"detail", a.detail},
      {"evidence",
       {{"blocks", heights},
        {"proofs", a.evidence.proofs.size()},
        {"authorizations", a.evidence.authorizations.size()},
        {"pod", a.evidence.pod.has_value()},
        {"rejection", a.evidence.rejection.has_value()}}},
    };
  }

  json render(const ChainDecision& d)
  {
    json j{{"status", to_string(d.status)}, {"position", d.position}};
    if (d.status == ChainStatus::invalid)
    {
      j["error"] = to_string(d.general.error);
    }
    if (d.revocation)
    {
      j["revocation"] = render(d.revocation->event);
      j["revocation"]["t"] = d.revocation->t;
    }
    return j;
  }

  json render(const SubmitOutcome& o)
  {
    json j{{"event", render(o.request.event)}};
    if (o.pod)
    {
      j["result"] = "accepted";
      j["pod"] = render(*o.pod);
    }
    else if (o.rejection)
    {
      j["result"] = "rejected";
      j["rejection"] = render(*o.rejection);
    }
    else
    {
      j["result"] = "no-response";
    }
    if (o.assessment)
    {
      j["refusal_verdict"] = to_string(o.assessment->verdict);
      j["refusal_detail"] = o.assessment->detail;
    }
    if (o.alarm)
    {
      j["alarm"] = render(*o.alarm);
    }
    return j;
  }

  json render(const MemberVerdict& v)
  {
    json j{
      {"verdict",
       v.verdict == Membership::is_member ? "member" :
         v.verdict == Membership::not_member ? "not-member" :
                                               "alarm"},
      {"chain", render(v.decision)},
    };
    if (v.alarm)
    {
      j["alarm"] = render(*v.alarm);
    }
    return j;
  }

  json render(const Misbehavior& m)
  {
    json heights = json::array();
    for (const auto& b : m.blocks)
    {
      heights.push_back(b.height);
    }
    json j{{"misbehavior", to_string(m.kind)}, {"detail", m.detail}, {"blocks", heights}};
    if (m.update)
    {
      j["update_t"] = m.update->t;
    }
    if (m.compact_update)
    {
      j["update_t"] = m.compact_update->t;
    }
    return j;
  }

  json render(const Endorsement& e)
  {
    return {{"endorsed", render(e.block)}, {"auditor", e.auditor.hex()}};
  }

  void emit(const json& j)
  {
    std::cout << j.dump() << std::endl;
  }
}
