// Copyright (c) The revledger authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "revledger/auditor.hpp"

#include "revledger/encoding.hpp"

namespace revledger
{
  std::string to_string(AuditorMode m)
  {
    return m == AuditorMode::full_copy ? "full" : "stream";
  }

  std::string to_string(MisbehaviorKind k)
  {
    switch (k)
    {
      case MisbehaviorKind::broken_root_chain:
        return "BrokenRootChain";
      case MisbehaviorKind::non_monotonic_timestamp:
        return "NonMonotonicTimestamp";
      case MisbehaviorKind::non_append_mutation:
        return "NonAppendMutation";
      case MisbehaviorKind::fork_detected:
        return "ForkDetected";
      case MisbehaviorKind::root_mismatch:
        return "RootMismatch";
      case MisbehaviorKind::bad_block_signature:
        return "BadBlockSignature";
      case MisbehaviorKind::wrongful_refusal:
        return "WrongfulRefusal";
    }
    return "Unknown";
  }

  Bytes encode(const StreamState& s)
  {
    Encoder e(TypeTag::auditor_state);
    e.field(s.last_root).u64(s.last_t).flag(s.last_block.has_value());
    if (s.last_block)
    {
      e.field(encode(*s.last_block));
    }
    return e.take();
  }

  StreamState decode_stream_state(ByteView data)
  {
    Decoder d(data, TypeTag::auditor_state);
    StreamState s;
    s.last_root = d.digest_field();
    s.last_t = d.u64();
    if (d.flag())
    {
      s.last_block = decode_block(d.field());
    }
    d.finish();
    return s;
  }

  Auditor::Auditor(KeyPair key, PublicKey utp, AuditorMode mode) :
    key_(std::move(key)),
    public_key_(key_.public_key()),
    utp_(std::move(utp)),
    mode_(mode)
  {}

  void Auditor::attach(const Digest& trusted_block_hash)
  {
    std::lock_guard lock(mutex_);
    awaiting_ = trusted_block_hash;
  }

  std::optional<Misbehavior> Auditor::flag(Misbehavior m)
  {
    halted_ = true;
    misbehaviors_.push_back(m);
    return m;
  }

  std::optional<Misbehavior> Auditor::ingest(const AuditItem& item)
  {
    std::lock_guard lock(mutex_);
    if (halted_)
    {
      return std::nullopt;
    }
    if (const auto* up = std::get_if<UpdateProof>(&item))
    {
      return ingest_update_locked(*up);
    }
    if (const auto* u = std::get_if<CompactUpdate>(&item))
    {
      return ingest_compact_locked(*u);
    }
    return ingest_block_locked(std::get<Block>(item));
  }

  std::optional<Misbehavior> Auditor::ingest_update(const UpdateProof& up)
  {
    return ingest(up);
  }

  std::optional<Misbehavior> Auditor::ingest_compact(const CompactUpdate& u)
  {
    return ingest(u);
  }

  std::optional<Misbehavior> Auditor::ingest_block(const Block& b)
  {
    return ingest(b);
  }

  std::optional<Misbehavior> Auditor::ingest_update_locked(const UpdateProof& up)
  {
    if (mode_ == AuditorMode::full_copy)
    {
      return ingest_compact_locked(compact(up));
    }
    if (awaiting_)
    {
      return std::nullopt;
    }
    Misbehavior m;
    m.update = up;
    if (up.t <= state_.last_t)
    {
      m.kind = MisbehaviorKind::non_monotonic_timestamp;
      m.detail = "update t=" + std::to_string(up.t) + " after t=" +
        std::to_string(state_.last_t);
      return flag(std::move(m));
    }
    const auto before = proof_root(up.before);
    if (!before || *before != state_.last_root)
    {
      m.kind = MisbehaviorKind::broken_root_chain;
      m.detail = "update does not start from the last verified root";
      return flag(std::move(m));
    }
    const auto after = proof_root(up.after);
    const auto check = after ?
      check_update(up, state_.last_root, *after) :
      UpdateCheck::malformed;
    if (check == UpdateCheck::non_monotonic)
    {
      m.kind = MisbehaviorKind::non_monotonic_timestamp;
      m.detail = "entry t does not grow within its leaf";
      return flag(std::move(m));
    }
    if (check != UpdateCheck::ok)
    {
      m.kind = MisbehaviorKind::non_append_mutation;
      m.detail = "update is not a single append";
      return flag(std::move(m));
    }
    state_.last_root = *after;
    state_.last_t = up.t;
    return std::nullopt;
  }

  std::optional<Misbehavior> Auditor::ingest_compact_locked(const CompactUpdate& u)
  {
    if (mode_ == AuditorMode::proof_stream)
    {
      Misbehavior m;
      m.kind = MisbehaviorKind::broken_root_chain;
      m.detail = "compact update without proof";
      m.compact_update = u;
      return flag(std::move(m));
    }
    if (!awaiting_ && u.t <= state_.last_t)
    {
      Misbehavior m;
      m.kind = MisbehaviorKind::non_monotonic_timestamp;
      m.detail = "update t=" + std::to_string(u.t) + " after t=" +
        std::to_string(state_.last_t);
      m.compact_update = u;
      return flag(std::move(m));
    }
    try
    {
      replica_.insert(u.index, u.t, u.event_hash);
    }
    catch (const NonMonotonicTimestamp&)
    {
      Misbehavior m;
      m.kind = MisbehaviorKind::non_monotonic_timestamp;
      m.detail = "entry t does not grow within its leaf";
      m.compact_update = u;
      return flag(std::move(m));
    }
    state_.last_root = replica_.root();
    state_.last_t = u.t;
    return std::nullopt;
  }

  std::optional<Misbehavior> Auditor::ingest_block_locked(const Block& b)
  {
    Misbehavior m;
    m.blocks = {b};
    if (!verify_block(b, utp_))
    {
      m.kind = MisbehaviorKind::bad_block_signature;
      m.detail = "block " + std::to_string(b.height) + " is not signed by the ledger";
      return flag(std::move(m));
    }

    if (awaiting_)
    {
      if (b.hash() != *awaiting_)
      {
        return std::nullopt;
      }
      awaiting_.reset();
      if (mode_ == AuditorMode::proof_stream)
      {
        state_.last_root = b.root;
        state_.last_t = b.t_latest;
      }
    }
    else if (state_.last_block)
    {
      const auto& last = *state_.last_block;
      if (b.height == last.height && b.hash() != last.hash())
      {
        m.kind = MisbehaviorKind::fork_detected;
        m.detail = "two blocks at height " + std::to_string(b.height);
        m.blocks = {last, b};
        return flag(std::move(m));
      }
      if (b.height <= last.height)
      {
        return std::nullopt;
      }
      if (b.height != last.height + 1)
      {
        m.kind = MisbehaviorKind::broken_root_chain;
        m.detail = "blocks skipped before height " + std::to_string(b.height);
        return flag(std::move(m));
      }
      if (b.prev != last.hash())
      {
        m.kind = MisbehaviorKind::fork_detected;
        m.detail = "block " + std::to_string(b.height) +
          " does not extend the verified block";
        m.blocks = {last, b};
        return flag(std::move(m));
      }
    }
    else if (b.height != 0 || !b.prev.is_zero())
    {
      m.kind = MisbehaviorKind::broken_root_chain;
      m.detail = "feed does not start at genesis";
      return flag(std::move(m));
    }

    if (b.root != state_.last_root)
    {
      m.kind = MisbehaviorKind::root_mismatch;
      m.detail = "block " + std::to_string(b.height) +
        " root differs from the verified root";
      return flag(std::move(m));
    }
    if (b.t_latest != state_.last_t)
    {
      m.kind = MisbehaviorKind::root_mismatch;
      m.detail = "block " + std::to_string(b.height) + " t_latest differs";
      return flag(std::move(m));
    }

    state_.last_block = b;
    Endorsement e{b, public_key_, {}};
    e.sig = key_.sign(signing_payload(e));
    published_.push_back(std::move(e));
    return std::nullopt;
  }

  std::size_t Auditor::sync(LedgerApi& ledger, std::size_t batch)
  {
    std::size_t total = 0;
    const bool compact_feed = mode_ == AuditorMode::full_copy;
    while (true)
    {
      std::size_t cursor;
      {
        std::lock_guard lock(mutex_);
        if (halted_)
        {
          return total;
        }
        cursor = cursor_;
      }
      auto items = ledger.audit_items(cursor, batch, compact_feed);
      if (items.empty())
      {
        return total;
      }
      for (const auto& item : items)
      {
        ingest(item);
      }
      {
        std::lock_guard lock(mutex_);
        cursor_ += items.size();
      }
      total += items.size();
    }
  }

  std::vector<Endorsement> Auditor::endorsed_blocks()
  {
    std::lock_guard lock(mutex_);
    constexpr std::size_t recent = 64;
    const auto first = published_.size() > recent ? published_.size() - recent : 0;
    return {published_.begin() + static_cast<std::ptrdiff_t>(first), published_.end()};
  }

  SubmitResponse Auditor::relay_submit(const SubmitRequest& request)
  {
    if (relay_ == nullptr)
    {
      throw std::runtime_error("auditor has no ledger to relay to");
    }
    auto response = relay_->submit(request);
    const auto* rejection = std::get_if<Rejection>(&response);
    if (rejection == nullptr || !verify_rejection(*rejection, utp_))
    {
      return response;
    }
    sync(*relay_);
    auto block = last_block();
    if (!block)
    {
      return response;
    }
    SignatureCache cache;
    ProofHistory source(relay_, *block, utp_, cache);
    try
    {
      auto a = assess_refusal(source, request, *rejection);
      if (a.verdict == RefusalVerdict::wrongful)
      {
        Misbehavior m;
        m.kind = MisbehaviorKind::wrongful_refusal;
        m.detail = a.detail;
        m.alarm = Alarm{AlarmKind::wrongful_refusal, a.detail, source.evidence()};
        m.alarm->evidence.rejection = *rejection;
        m.alarm->evidence.request = request;
        std::lock_guard lock(mutex_);
        misbehaviors_.push_back(std::move(m));
      }
    }
    catch (const MisbehaviorDetected& d)
    {
      Misbehavior m;
      m.kind = d.alarm.kind == AlarmKind::fork_detected ?
        MisbehaviorKind::fork_detected :
        MisbehaviorKind::root_mismatch;
      m.detail = d.what();
      m.alarm = d.alarm;
      std::lock_guard lock(mutex_);
      misbehaviors_.push_back(std::move(m));
    }
    return response;
  }

  bool Auditor::halted() const
  {
    std::lock_guard lock(mutex_);
    return halted_;
  }

  std::vector<Misbehavior> Auditor::misbehaviors() const
  {
    std::lock_guard lock(mutex_);
    return misbehaviors_;
  }

  std::optional<Block> Auditor::last_block() const
  {
    std::lock_guard lock(mutex_);
    return state_.last_block;
  }

  Digest Auditor::current_root() const
  {
    std::lock_guard lock(mutex_);
    return state_.last_root;
  }

  StreamState Auditor::stream_state() const
  {
    std::lock_guard lock(mutex_);
    return state_;
  }

  std::size_t Auditor::state_size() const
  {
    std::lock_guard lock(mutex_);
    auto size = encode(state_).size();
    if (mode_ == AuditorMode::full_copy)
    {
      // Per leaf: index, and per entry a timestamp and event hash.
      size += replica_.leaf_count() * Digest::size +
        replica_.entry_count() * (8 + Digest::size);
    }
    return size;
  }
}
