// Copyright (c) The revledger authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "revledger/events.hpp"

#include "revledger/encoding.hpp"

#include <algorithm>
#include <stdexcept>

namespace revledger
{
  namespace
  {
    template <class... Ts>
    struct overloaded : Ts...
    {
      using Ts::operator()...;
    };
    template <class... Ts>
    overloaded(Ts...) -> overloaded<Ts...>;

    constexpr std::size_t preimage_size = 32;

    Encoder member_fields(TypeTag tag, const MemberEvent& e)
    {
      Encoder enc(tag);
      enc.field(e.issuer)
        .field(e.subject)
        .field(encode(e.group))
        .field(e.role.tag())
        .u64(e.freshness);
      return enc;
    }

    Encoder lock_fields(TypeTag tag, const GroupLockEvent& e)
    {
      Encoder enc(tag);
      enc.field(e.issuer).field(encode(e.group)).u64(e.freshness);
      return enc;
    }

    Encoder cert_revocation_fields(const CertRevocation& r)
    {
      Encoder enc(TypeTag::cert_revocation);
      enc.field(r.issuer).field(r.cert_hash).u64(r.freshness);
      return enc;
    }

    Encoder hier_fields(const HierCertificate& c)
    {
      Encoder enc(TypeTag::hier_certificate);
      enc.field(c.issuer).field(c.subject).u64(c.auth.size());
      for (const auto& a : c.auth)
      {
        enc.field(a);
      }
      enc.flag(c.validity.has_value());
      if (c.validity)
      {
        enc.u64(c.validity->not_before).u64(c.validity->not_after);
      }
      enc.flag(c.revocation_commitment.has_value());
      if (c.revocation_commitment)
      {
        enc.field(*c.revocation_commitment);
      }
      return enc;
    }

    Role decode_role(Decoder& d)
    {
      auto tag = d.string_field();
      if (tag.empty())
      {
        throw DecodeError("empty role");
      }
      return Role(std::move(tag));
    }

    template <class T>
    T decode_member(ByteView data, TypeTag tag)
    {
      Decoder d(data, tag);
      T e;
      e.issuer = d.key_field();
      e.subject = d.key_field();
      e.group = decode_group(d.field());
      e.role = decode_role(d);
      e.freshness = d.u64();
      e.sig = d.signature_field();
      d.finish();
      return e;
    }

    template <class T>
    T decode_lock(ByteView data, TypeTag tag)
    {
      Decoder d(data, tag);
      T e;
      e.issuer = d.key_field();
      e.group = decode_group(d.field());
      e.freshness = d.u64();
      e.sig = d.signature_field();
      d.finish();
      return e;
    }

    template <class T, class Sign>
    T signed_member(
      const KeyPair& issuer,
      const PublicKey& subject,
      const GroupId& group,
      const Role& role,
      SequenceNumber freshness,
      Sign&& sign)
    {
      T e;
      e.issuer = issuer.public_key();
      e.subject = subject;
      e.group = group;
      e.role = role;
      e.freshness = freshness;
      e.sig = sign(e);
      return e;
    }
  }

  GroupId::GroupId(PublicKey owner_key, std::string group_name) :
    owner(std::move(owner_key)),
    name(std::move(group_name))
  {
    if (name.size() > max_name_size)
    {
      throw std::invalid_argument("group name exceeds 256 bytes");
    }
  }

  Role::Role(std::string tag) : tag_(std::move(tag))
  {
    if (tag_.empty())
    {
      throw std::invalid_argument("role tag must be nonempty");
    }
  }

  Bytes encode(const GroupId& g)
  {
    return Encoder(TypeTag::group_id).field(g.owner).field(g.name).take();
  }

  GroupId decode_group(ByteView data)
  {
    Decoder d(data, TypeTag::group_id);
    auto owner = d.key_field();
    auto name = d.string_field();
    d.finish();
    if (name.size() > GroupId::max_name_size)
    {
      throw DecodeError("group name exceeds 256 bytes");
    }
    return GroupId(std::move(owner), std::move(name));
  }

  Bytes encode(const MemberCertificate& c)
  {
    return member_fields(TypeTag::member_certificate, c).field(c.sig).take();
  }

  Bytes encode(const MemberRevocation& r)
  {
    return member_fields(TypeTag::member_revocation, r).field(r.sig).take();
  }

  Bytes encode(const CertRevocation& r)
  {
    return cert_revocation_fields(r).field(r.sig).take();
  }

  Bytes encode(const PreimageRevocation& r)
  {
    return Encoder(TypeTag::preimage_revocation)
      .field(r.commitment)
      .field(r.preimage)
      .take();
  }

  Bytes encode(const SuspendEvent& e)
  {
    return lock_fields(TypeTag::suspend, e).field(e.sig).take();
  }

  Bytes encode(const ResumeEvent& e)
  {
    return lock_fields(TypeTag::resume, e).field(e.sig).take();
  }

  Bytes encode(const Event& e)
  {
    return std::visit([](const auto& v) { return encode(v); }, e);
  }

  Bytes encode(const HierCertificate& c)
  {
    return hier_fields(c).field(c.sig).take();
  }

  Bytes encode(const MemberChain& chain)
  {
    Encoder enc(TypeTag::member_chain);
    enc.u64(chain.size());
    for (const auto& c : chain)
    {
      enc.field(encode(c));
    }
    return enc.take();
  }

  Bytes encode(const HierChain& chain)
  {
    Encoder enc(TypeTag::hier_chain);
    enc.u64(chain.size());
    for (const auto& c : chain)
    {
      enc.field(encode(c));
    }
    return enc.take();
  }

  Bytes encode(const TimedEvent& e)
  {
    return Encoder(TypeTag::timed_event).u64(e.t).field(encode(e.event)).take();
  }

  Event decode_event(ByteView data)
  {
    switch (Decoder::peek_tag(data))
    {
      case TypeTag::member_certificate:
        return decode_member<MemberCertificate>(
          data, TypeTag::member_certificate);
      case TypeTag::member_revocation:
        return decode_member<MemberRevocation>(
          data, TypeTag::member_revocation);
      case TypeTag::cert_revocation:
      {
        Decoder d(data, TypeTag::cert_revocation);
        CertRevocation r;
        r.issuer = d.key_field();
        r.cert_hash = d.digest_field();
        r.freshness = d.u64();
        r.sig = d.signature_field();
        d.finish();
        return r;
      }
      case TypeTag::preimage_revocation:
      {
        Decoder d(data, TypeTag::preimage_revocation);
        PreimageRevocation r;
        r.commitment = d.digest_field();
        auto x = d.field();
        d.finish();
        if (x.size() != preimage_size)
        {
          throw DecodeError("preimage must be 32 bytes");
        }
        r.preimage.assign(x.begin(), x.end());
        return r;
      }
      case TypeTag::suspend:
        return decode_lock<SuspendEvent>(data, TypeTag::suspend);
      case TypeTag::resume:
        return decode_lock<ResumeEvent>(data, TypeTag::resume);
      default:
        throw DecodeError("not an event encoding");
    }
  }

  HierCertificate decode_hier_certificate(ByteView data)
  {
    Decoder d(data, TypeTag::hier_certificate);
    HierCertificate c;
    c.issuer = d.key_field();
    c.subject = d.key_field();
    const auto n = d.u64();
    std::string prev;
    for (std::uint64_t i = 0; i < n; ++i)
    {
      auto a = d.string_field();
      if (i > 0 && a <= prev)
      {
        throw DecodeError("auth tags must be sorted and unique");
      }
      prev = a;
      c.auth.insert(std::move(a));
    }
    if (d.flag())
    {
      Validity v;
      v.not_before = d.u64();
      v.not_after = d.u64();
      if (v.not_before > v.not_after)
      {
        throw DecodeError("validity window is inverted");
      }
      c.validity = v;
    }
    if (d.flag())
    {
      c.revocation_commitment = d.digest_field();
    }
    c.sig = d.signature_field();
    d.finish();
    return c;
  }

  MemberChain decode_member_chain(ByteView data)
  {
    Decoder d(data, TypeTag::member_chain);
    const auto n = d.u64();
    MemberChain chain;
    for (std::uint64_t i = 0; i < n; ++i)
    {
      auto e = decode_event(d.field());
      auto* c = std::get_if<MemberCertificate>(&e);
      if (c == nullptr)
      {
        throw DecodeError("membership chain holds a non-certificate");
      }
      chain.push_back(std::move(*c));
    }
    d.finish();
    return chain;
  }

  HierChain decode_hier_chain(ByteView data)
  {
    Decoder d(data, TypeTag::hier_chain);
    const auto n = d.u64();
    HierChain chain;
    for (std::uint64_t i = 0; i < n; ++i)
    {
      chain.push_back(decode_hier_certificate(d.field()));
    }
    d.finish();
    return chain;
  }

  TimedEvent decode_timed_event(ByteView data)
  {
    Decoder d(data, TypeTag::timed_event);
    TimedEvent e;
    e.t = d.u64();
    e.event = decode_event(d.field());
    d.finish();
    return e;
  }

  Bytes signing_payload(const Event& e)
  {
    return std::visit(
      overloaded{
        [](const MemberCertificate& c) {
          return member_fields(TypeTag::member_certificate, c).take();
        },
        [](const MemberRevocation& r) {
          return member_fields(TypeTag::member_revocation, r).take();
        },
        [](const CertRevocation& r) {
          return cert_revocation_fields(r).take();
        },
        [](const PreimageRevocation& r) { return encode(r); },
        [](const SuspendEvent& s) {
          return lock_fields(TypeTag::suspend, s).take();
        },
        [](const ResumeEvent& s) {
          return lock_fields(TypeTag::resume, s).take();
        }},
      e);
  }

  Bytes signing_payload(const HierCertificate& c)
  {
    return hier_fields(c).take();
  }

  MemberCertificate issue_certificate(
    const KeyPair& issuer,
    const PublicKey& subject,
    const GroupId& group,
    const Role& role,
    SequenceNumber freshness)
  {
    return signed_member<MemberCertificate>(
      issuer, subject, group, role, freshness, [&](const auto& e) {
        return issuer.sign(signing_payload(Event(e)));
      });
  }

  MemberRevocation issue_revocation(
    const KeyPair& issuer,
    const PublicKey& subject,
    const GroupId& group,
    const Role& role,
    SequenceNumber freshness)
  {
    return signed_member<MemberRevocation>(
      issuer, subject, group, role, freshness, [&](const auto& e) {
        return issuer.sign(signing_payload(Event(e)));
      });
  }

  CertRevocation issue_cert_revocation(
    const KeyPair& issuer, const Digest& cert_hash, SequenceNumber freshness)
  {
    CertRevocation r;
    r.issuer = issuer.public_key();
    r.cert_hash = cert_hash;
    r.freshness = freshness;
    r.sig = issuer.sign(cert_revocation_fields(r).bytes());
    return r;
  }

  PreimageRevocation reveal_preimage(ByteView preimage)
  {
    if (preimage.size() != preimage_size)
    {
      throw std::invalid_argument("preimage must be 32 bytes");
    }
    PreimageRevocation r;
    r.commitment = hash(preimage);
    r.preimage.assign(preimage.begin(), preimage.end());
    return r;
  }

  SuspendEvent issue_suspend(
    const KeyPair& issuer, const GroupId& group, SequenceNumber freshness)
  {
    SuspendEvent e;
    e.issuer = issuer.public_key();
    e.group = group;
    e.freshness = freshness;
    e.sig = issuer.sign(lock_fields(TypeTag::suspend, e).bytes());
    return e;
  }

  ResumeEvent issue_resume(
    const KeyPair& issuer, const GroupId& group, SequenceNumber freshness)
  {
    ResumeEvent e;
    e.issuer = issuer.public_key();
    e.group = group;
    e.freshness = freshness;
    e.sig = issuer.sign(lock_fields(TypeTag::resume, e).bytes());
    return e;
  }

  HierCertificate issue_hier_certificate(
    const KeyPair& issuer,
    const PublicKey& subject,
    std::set<std::string> auth,
    std::optional<Validity> validity,
    std::optional<Digest> revocation_commitment)
  {
    if (validity && validity->not_before > validity->not_after)
    {
      throw std::invalid_argument("validity window is inverted");
    }
    HierCertificate c;
    c.issuer = issuer.public_key();
    c.subject = subject;
    c.auth = std::move(auth);
    c.validity = validity;
    c.revocation_commitment = revocation_commitment;
    c.sig = issuer.sign(signing_payload(c));
    return c;
  }

  Digest event_hash(const Event& e)
  {
    return hash(encode(e));
  }

  Digest certificate_hash(const MemberCertificate& c)
  {
    return hash(encode(c));
  }

  Digest certificate_hash(const HierCertificate& c)
  {
    return hash(encode(c));
  }

  Digest member_index(
    const GroupId& group, const Role& role, const PublicKey& subject)
  {
    return hash(Encoder(TypeTag::member_index)
                  .field(encode(group))
                  .field(role.tag())
                  .field(subject)
                  .bytes());
  }

  Digest suspension_index(const GroupId& group)
  {
    return hash(Encoder(TypeTag::suspension_index)
                  .field(encode(group))
                  .field(std::string_view("suspension"))
                  .bytes());
  }

  Digest index_of(const Event& e)
  {
    return std::visit(
      overloaded{
        [](const MemberEvent& m) {
          return member_index(m.group, m.role, m.subject);
        },
        [](const CertRevocation& r) { return r.cert_hash; },
        [](const PreimageRevocation& r) { return r.commitment; },
        [](const GroupLockEvent& l) { return suspension_index(l.group); }},
      e);
  }

  bool is_authentic(const Event& e)
  {
    if (const auto* p = std::get_if<PreimageRevocation>(&e))
    {
      return p->preimage.size() == preimage_size &&
        hash(p->preimage) == p->commitment;
    }
    const auto issuer = issuer_of(e);
    const Signature& sig = std::visit(
      overloaded{
        [](const MemberEvent& m) -> const Signature& { return m.sig; },
        [](const CertRevocation& r) -> const Signature& { return r.sig; },
        [](const GroupLockEvent& l) -> const Signature& { return l.sig; },
        [](const PreimageRevocation&) -> const Signature& {
          throw std::logic_error("unreachable");
        }},
      e);
    return verify(*issuer, signing_payload(e), sig);
  }

  bool is_authentic(const HierCertificate& c)
  {
    return verify(c.issuer, signing_payload(c), c.sig);
  }

  std::optional<PublicKey> issuer_of(const Event& e)
  {
    return std::visit(
      overloaded{
        [](const MemberEvent& m) -> std::optional<PublicKey> {
          return m.issuer;
        },
        [](const CertRevocation& r) -> std::optional<PublicKey> {
          return r.issuer;
        },
        [](const GroupLockEvent& l) -> std::optional<PublicKey> {
          return l.issuer;
        },
        [](const PreimageRevocation&) -> std::optional<PublicKey> {
          return std::nullopt;
        }},
      e);
  }

  SequenceNumber freshness_of(const Event& e)
  {
    return std::visit(
      overloaded{
        [](const MemberEvent& m) { return m.freshness; },
        [](const CertRevocation& r) { return r.freshness; },
        [](const GroupLockEvent& l) { return l.freshness; },
        [](const PreimageRevocation&) { return SequenceNumber{0}; }},
      e);
  }

  std::string action_of(const Event& e)
  {
    return std::visit(
      overloaded{
        [](const MemberCertificate&) { return std::string("add"); },
        [](const MemberRevocation&) { return std::string("revoke"); },
        [](const CertRevocation&) { return std::string("revoke-cert"); },
        [](const PreimageRevocation&) {
          return std::string("revoke-preimage");
        },
        [](const SuspendEvent&) { return std::string("suspend"); },
        [](const ResumeEvent&) { return std::string("resume"); }},
      e);
  }

  const GroupId* group_of(const Event& e)
  {
    return std::visit(
      overloaded{
        [](const MemberEvent& m) -> const GroupId* { return &m.group; },
        [](const GroupLockEvent& l) -> const GroupId* { return &l.group; },
        [](const CertRevocation&) -> const GroupId* { return nullptr; },
        [](const PreimageRevocation&) -> const GroupId* { return nullptr; }},
      e);
  }

  bool SignatureCache::authentic(const Event& e)
  {
    return authentic(e, event_hash(e));
  }

  bool SignatureCache::authentic(const Event& e, const Digest& hash)
  {
    if (good_.count(hash) != 0)
    {
      return true;
    }
    if (!is_authentic(e))
    {
      return false;
    }
    good_.insert(hash);
    return true;
  }

  std::string to_string(ChainError e)
  {
    switch (e)
    {
      case ChainError::none:
        return "none";
      case ChainError::broken_link:
        return "BrokenLink";
      case ChainError::bad_signature:
        return "BadSignature";
      case ChainError::wrong_root:
        return "WrongRoot";
      case ChainError::wrong_role:
        return "WrongRole";
      case ChainError::wrong_subject:
        return "WrongSubject";
      case ChainError::expired:
        return "Expired";
    }
    return "unknown";
  }

  GeneralCheck general_checks(
    const MemberChain& chain,
    const PublicKey& root,
    const PublicKey& subject,
    const GroupId& group,
    const Role& role,
    SignatureCache* cache)
  {
    if (root != group.owner)
    {
      return {ChainError::wrong_root, 0};
    }
    if (chain.empty())
    {
      // The implicit initial event makes the owner a leader, nothing more.
      if (!role.is_leader())
      {
        return {ChainError::wrong_role, 0};
      }
      if (subject != group.owner)
      {
        return {ChainError::wrong_subject, 0};
      }
      return {};
    }
    for (std::size_t i = 0; i < chain.size(); ++i)
    {
      const auto& c = chain[i];
      const Event e(c);
      if (!(cache != nullptr ? cache->authentic(e) : is_authentic(e)))
      {
        return {ChainError::bad_signature, i};
      }
      if (i == 0 ? c.issuer != root : c.issuer != chain[i - 1].subject)
      {
        return {i == 0 ? ChainError::wrong_root : ChainError::broken_link, i};
      }
      const bool last = i + 1 == chain.size();
      if (c.group != group || (last ? c.role != role : !c.role.is_leader()))
      {
        return {ChainError::wrong_role, i};
      }
      if (last && c.subject != subject)
      {
        return {ChainError::wrong_subject, i};
      }
    }
    return {};
  }

  GeneralCheck general_checks(
    const HierChain& chain,
    const PublicKey& root,
    const PublicKey& subject,
    std::uint64_t now)
  {
    if (chain.empty())
    {
      return subject == root ? GeneralCheck{} :
                               GeneralCheck{ChainError::wrong_subject, 0};
    }
    for (std::size_t i = 0; i < chain.size(); ++i)
    {
      const auto& c = chain[i];
      if (!is_authentic(c))
      {
        return {ChainError::bad_signature, i};
      }
      if (i == 0 ? c.issuer != root : c.issuer != chain[i - 1].subject)
      {
        return {i == 0 ? ChainError::wrong_root : ChainError::broken_link, i};
      }
      if (c.validity &&
          (now < c.validity->not_before || now > c.validity->not_after))
      {
        return {ChainError::expired, i};
      }
    }
    if (chain.back().subject != subject)
    {
      return {ChainError::wrong_subject, chain.size() - 1};
    }
    return {};
  }

  std::set<std::string> auth_intersection(const HierChain& chain)
  {
    if (chain.empty())
    {
      return {};
    }
    std::set<std::string> acc = chain.front().auth;
    for (std::size_t i = 1; i < chain.size(); ++i)
    {
      std::set<std::string> next;
      std::set_intersection(
        acc.begin(),
        acc.end(),
        chain[i].auth.begin(),
        chain[i].auth.end(),
        std::inserter(next, next.begin()));
      acc = std::move(next);
    }
    return acc;
  }
}
