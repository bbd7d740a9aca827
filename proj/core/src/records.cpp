// Copyright (c) The revledger authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "revledger/records.hpp"

#include "revledger/encoding.hpp"

namespace revledger
{
  namespace
  {
    Encoder pod_fields(const ProofOfDelivery& p)
    {
      Encoder e(TypeTag::proof_of_delivery);
      e.field(p.event_hash)
        .u64(p.block_height)
        .field(p.block_hash)
        .u64(p.t_latest)
        .u64(p.t_utc);
      return e;
    }

    Encoder rejection_fields(const Rejection& r)
    {
      Encoder e(TypeTag::rejection);
      e.u64(static_cast<std::uint64_t>(r.reason))
        .field(r.event_hash)
        .field(r.detail)
        .u64(r.t_latest)
        .flag(r.blocking.has_value());
      if (r.blocking)
      {
        e.field(encode(*r.blocking));
      }
      e.flag(r.blocking_authorization.has_value());
      if (r.blocking_authorization)
      {
        e.field(encode(*r.blocking_authorization));
      }
      return e;
    }
  }

  Bytes signing_payload(const SignedAuthorization& a)
  {
    Encoder e(TypeTag::authorization);
    e.field(a.event_hash).flag(a.authorization.has_value());
    if (a.authorization)
    {
      e.field(encode(*a.authorization));
    }
    return e.take();
  }

  SignedAuthorization sign_authorization(
    const KeyPair& utp,
    const Digest& event_hash,
    std::optional<StoredAuthorization> authorization)
  {
    SignedAuthorization a{event_hash, std::move(authorization), {}};
    a.sig = utp.sign(signing_payload(a));
    return a;
  }

  bool verify_authorization(const SignedAuthorization& a, const PublicKey& utp)
  {
    return verify(utp, signing_payload(a), a.sig);
  }

  Bytes encode(const SignedAuthorization& a)
  {
    auto out = signing_payload(a);
    Encoder tail(TypeTag::authorization);
    tail.field(a.sig);
    const auto& t = tail.bytes();
    out.insert(out.end(), t.begin() + 1, t.end());
    return out;
  }

  SignedAuthorization decode_signed_authorization(ByteView data)
  {
    Decoder d(data, TypeTag::authorization);
    SignedAuthorization a;
    a.event_hash = d.digest_field();
    if (d.flag())
    {
      a.authorization = decode_authorization(d.field());
    }
    a.sig = d.signature_field();
    d.finish();
    return a;
  }

  Digest Block::hash() const
  {
    return Hasher().update(prev).update(root).update_u64(t_latest).update_u64(t_utc).finish();
  }

  Bytes block_signing_payload(const Block& b)
  {
    return Encoder(TypeTag::block).u64(b.height).field(b.hash()).take();
  }

  Block make_block(
    const KeyPair& utp,
    std::uint64_t height,
    const Digest& prev,
    const Digest& root,
    SequenceNumber t_latest,
    std::uint64_t t_utc)
  {
    Block b{height, prev, root, t_latest, t_utc, {}};
    b.sig = utp.sign(block_signing_payload(b));
    return b;
  }

  bool verify_block(const Block& b, const PublicKey& utp)
  {
    return verify(utp, block_signing_payload(b), b.sig);
  }

  Bytes signing_payload(const ProofOfDelivery& p)
  {
    return pod_fields(p).take();
  }

  bool verify_pod(const ProofOfDelivery& pod, const PublicKey& utp)
  {
    return verify(utp, signing_payload(pod), pod.sig);
  }

  Bytes signing_payload(const Rejection& r)
  {
    return rejection_fields(r).take();
  }

  bool verify_rejection(const Rejection& r, const PublicKey& utp)
  {
    return verify(utp, signing_payload(r), r.sig);
  }

  std::string to_string(RejectReason r)
  {
    switch (r)
    {
      case RejectReason::stale_freshness:
        return "StaleFreshness";
      case RejectReason::unauthorized:
        return "Unauthorized";
      case RejectReason::group_suspended:
        return "GroupSuspended";
      case RejectReason::bad_signature:
        return "BadSignature";
      case RejectReason::bad_preimage:
        return "BadPreimage";
      case RejectReason::duplicate_event:
        return "DuplicateEvent";
      case RejectReason::malformed:
        return "Malformed";
    }
    return "Unknown";
  }

  CompactUpdate compact(const UpdateProof& up)
  {
    return {up.before.index, up.t, up.event_hash};
  }

  Bytes encode(const Block& b)
  {
    return Encoder(TypeTag::block)
      .u64(b.height)
      .field(b.prev)
      .field(b.root)
      .u64(b.t_latest)
      .u64(b.t_utc)
      .field(b.sig)
      .take();
  }

  Block decode_block(ByteView data)
  {
    Decoder d(data, TypeTag::block);
    Block b;
    b.height = d.u64();
    b.prev = d.digest_field();
    b.root = d.digest_field();
    b.t_latest = d.u64();
    b.t_utc = d.u64();
    b.sig = d.signature_field();
    d.finish();
    return b;
  }

  Bytes encode(const ProofOfDelivery& p)
  {
    return pod_fields(p).field(p.sig).take();
  }

  ProofOfDelivery decode_pod(ByteView data)
  {
    Decoder d(data, TypeTag::proof_of_delivery);
    ProofOfDelivery p;
    p.event_hash = d.digest_field();
    p.block_height = d.u64();
    p.block_hash = d.digest_field();
    p.t_latest = d.u64();
    p.t_utc = d.u64();
    p.sig = d.signature_field();
    d.finish();
    return p;
  }

  Bytes encode(const StoredAuthorization& a)
  {
    Encoder e(TypeTag::stored_authorization);
    e.flag(a.scope.has_value());
    if (a.scope)
    {
      e.field(encode(*a.scope));
    }
    e.field(encode(a.chain));
    return e.take();
  }

  StoredAuthorization decode_authorization(ByteView data)
  {
    Decoder d(data, TypeTag::stored_authorization);
    StoredAuthorization a;
    if (d.flag())
    {
      a.scope = decode_group(d.field());
    }
    a.chain = decode_member_chain(d.field());
    d.finish();
    return a;
  }

  Bytes encode(const SubmitRequest& r)
  {
    Encoder e(TypeTag::submit_request);
    e.field(encode(r.event)).field(encode(r.chain)).flag(r.scope.has_value());
    if (r.scope)
    {
      e.field(encode(*r.scope));
    }
    return e.take();
  }

  SubmitRequest decode_submit_request(ByteView data)
  {
    Decoder d(data, TypeTag::submit_request);
    SubmitRequest r;
    r.event = decode_event(d.field());
    r.chain = decode_member_chain(d.field());
    if (d.flag())
    {
      r.scope = decode_group(d.field());
    }
    d.finish();
    return r;
  }

  Bytes encode(const Rejection& r)
  {
    return rejection_fields(r).field(r.sig).take();
  }

  Rejection decode_rejection(ByteView data)
  {
    Decoder d(data, TypeTag::rejection);
    Rejection r;
    const auto reason = d.u64();
    if (reason < 1 || reason > 7)
    {
      throw DecodeError("unknown rejection reason");
    }
    r.reason = static_cast<RejectReason>(reason);
    r.event_hash = d.digest_field();
    r.detail = d.string_field();
    r.t_latest = d.u64();
    if (d.flag())
    {
      r.blocking = decode_timed_event(d.field());
    }
    if (d.flag())
    {
      r.blocking_authorization = decode_authorization(d.field());
    }
    r.sig = d.signature_field();
    d.finish();
    return r;
  }

  Bytes encode(const SubmitResponse& r)
  {
    return std::visit([](const auto& v) { return encode(v); }, r);
  }

  SubmitResponse decode_submit_response(ByteView data)
  {
    if (Decoder::peek_tag(data) == TypeTag::proof_of_delivery)
    {
      return decode_pod(data);
    }
    return decode_rejection(data);
  }

  Bytes encode(const QueryResponse& r)
  {
    return Encoder(TypeTag::response)
      .field(encode(r.proof))
      .field(encode(r.block))
      .take();
  }

  QueryResponse decode_query_response(ByteView data)
  {
    Decoder d(data, TypeTag::response);
    QueryResponse r;
    r.proof = decode_proof(d.field());
    r.block = decode_block(d.field());
    d.finish();
    return r;
  }

  Bytes encode(const AuditItem& item)
  {
    return std::visit([](const auto& v) { return encode(v); }, item);
  }

  AuditItem decode_audit_item(ByteView data)
  {
    switch (Decoder::peek_tag(data))
    {
      case TypeTag::block:
        return decode_block(data);
      case TypeTag::compact_update:
        return decode_compact_update(data);
      default:
        return decode_update_proof(data);
    }
  }

  Bytes encode(const CompactUpdate& u)
  {
    return Encoder(TypeTag::compact_update)
      .field(u.index)
      .u64(u.t)
      .field(u.event_hash)
      .take();
  }

  CompactUpdate decode_compact_update(ByteView data)
  {
    Decoder d(data, TypeTag::compact_update);
    CompactUpdate u;
    u.index = d.digest_field();
    u.t = d.u64();
    u.event_hash = d.digest_field();
    d.finish();
    return u;
  }
}
