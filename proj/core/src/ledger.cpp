// Copyright (c) The revledger authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "revledger/ledger.hpp"

#include "revledger/encoding.hpp"

#include <cerrno>
#include <chrono>
#include <cstring>
#include <fcntl.h>
#include <fstream>
#include <mutex>
#include <sys/stat.h>
#include <unistd.h>

namespace revledger
{
  Clock system_clock()
  {
    return [] {
      return static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::seconds>(
          std::chrono::system_clock::now().time_since_epoch())
          .count());
    };
  }

  // Append-only record file: each record is a 4-byte big-endian length and
  // a canonical encoding.
  class Ledger::Log
  {
  public:
    explicit Log(const std::filesystem::path& path) : path_(path)
    {
      fd_ = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
      if (fd_ < 0)
      {
        throw std::runtime_error(
          "cannot open " + path.string() + ": " + std::strerror(errno));
      }
    }

    ~Log()
    {
      if (fd_ >= 0)
      {
        ::fsync(fd_);
        ::close(fd_);
      }
    }

    void append(ByteView record)
    {
      Bytes framed;
      framed.reserve(4 + record.size());
      put_u32(framed, static_cast<std::uint32_t>(record.size()));
      append_bytes(framed, record);
      const std::uint8_t* p = framed.data();
      std::size_t left = framed.size();
      while (left > 0)
      {
        const auto n = ::write(fd_, p, left);
        if (n < 0)
        {
          if (errno == EINTR)
          {
            continue;
          }
          throw std::runtime_error(
            "write to " + path_.string() + " failed: " + std::strerror(errno));
        }
        p += n;
        left -= static_cast<std::size_t>(n);
      }
    }

    void sync()
    {
      ::fsync(fd_);
    }

    /// Reads every complete record and drops a torn trailing one.
    static std::vector<Bytes> read_all(const std::filesystem::path& path)
    {
      std::vector<Bytes> records;
      std::ifstream in(path, std::ios::binary);
      if (!in)
      {
        return records;
      }
      Bytes data(
        (std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
      std::size_t pos = 0;
      while (data.size() - pos >= 4)
      {
        const auto len = get_u32(data.data() + pos);
        if (data.size() - pos - 4 < len)
        {
          break;
        }
        records.emplace_back(
          data.begin() + static_cast<std::ptrdiff_t>(pos + 4),
          data.begin() + static_cast<std::ptrdiff_t>(pos + 4 + len));
        pos += 4 + len;
      }
      if (pos != data.size())
      {
        std::filesystem::resize_file(path, pos);
      }
      return records;
    }

  private:
    static void append_bytes(Bytes& out, ByteView v)
    {
      out.insert(out.end(), v.begin(), v.end());
    }

    std::filesystem::path path_;
    int fd_ = -1;
  };

  // Reads the ledger's own state; the caller holds the ledger lock.
  class LedgerHistory : public HistorySource
  {
  public:
    explicit LedgerHistory(const Ledger& ledger) : ledger_(ledger) {}

    const std::vector<HistoryEntry>& entries(const Digest& index) override
    {
      auto [it, fresh] = cache_.try_emplace(index);
      if (fresh)
      {
        auto found = ledger_.by_index_.find(index);
        if (found != ledger_.by_index_.end())
        {
          for (auto pos : found->second)
          {
            it->second.push_back(ledger_.history_[pos]);
          }
        }
      }
      return it->second;
    }

    std::optional<StoredAuthorization> authorization(
      const Digest& event_hash) override
    {
      auto it = ledger_.authorizations_.find(event_hash);
      if (it == ledger_.authorizations_.end())
      {
        return std::nullopt;
      }
      return it->second;
    }

  private:
    const Ledger& ledger_;
    std::unordered_map<Digest, std::vector<HistoryEntry>> cache_;
  };

  namespace
  {
    Bytes log_event_record(
      SequenceNumber t,
      const Event& event,
      const std::optional<StoredAuthorization>& auth)
    {
      Encoder e(TypeTag::log_event);
      e.u64(t).field(encode(event)).flag(auth.has_value());
      if (auth)
      {
        e.field(encode(*auth));
      }
      return e.take();
    }

    Bytes log_block_record(const Block& b)
    {
      return Encoder(TypeTag::log_block).field(encode(b)).take();
    }
  }

  Ledger::Ledger(KeyPair key, LedgerOptions options) :
    key_(std::move(key)),
    public_key_(key_.public_key()),
    options_(std::move(options))
  {
    if (!options_.clock)
    {
      options_.clock = system_clock();
    }
    if (options_.data_dir)
    {
      std::filesystem::create_directories(*options_.data_dir);
      replay_log();
      log_ = std::make_unique<Log>(*options_.data_dir / log_file_name);
    }
    if (blocks_.empty())
    {
      publish_locked();
    }
  }

  Ledger::~Ledger() = default;

  void Ledger::replay_log()
  {
    const auto path = *options_.data_dir / log_file_name;
    for (const auto& record : Log::read_all(path))
    {
      switch (Decoder::peek_tag(record))
      {
        case TypeTag::log_event:
        {
          Decoder d(record, TypeTag::log_event);
          const auto t = d.u64();
          auto event = decode_event(d.field());
          std::optional<StoredAuthorization> auth;
          if (d.flag())
          {
            auth = decode_authorization(d.field());
          }
          d.finish();
          if (t <= latest_t())
          {
            throw LogCorrupted("sequence numbers in the log are not increasing");
          }
          append_locked(event, event_hash(event), std::move(auth), t, false);
          break;
        }
        case TypeTag::log_block:
        {
          Decoder d(record, TypeTag::log_block);
          auto b = decode_block(d.field());
          d.finish();
          if (b.height != blocks_.size() || b.root != tree_.root())
          {
            throw LogCorrupted(
              "block " + std::to_string(b.height) +
              " does not match the replayed tree");
          }
          blocks_.push_back(b);
          snapshots_.emplace(b.height, tree_);
          if (options_.keep_audit_stream)
          {
            audit_.push_back(b);
          }
          events_since_block_ = 0;
          break;
        }
        default:
          throw LogCorrupted("unknown record in the event log");
      }
    }
  }

  SequenceNumber Ledger::latest_t() const
  {
    return history_.empty() ? 0 : history_.back().t;
  }

  Digest Ledger::current_root() const
  {
    std::shared_lock lock(mutex_);
    return tree_.root();
  }

  PrefixTree Ledger::current_tree() const
  {
    std::shared_lock lock(mutex_);
    return tree_;
  }

  std::vector<TimedEvent> Ledger::history() const
  {
    std::shared_lock lock(mutex_);
    std::vector<TimedEvent> out;
    out.reserve(history_.size());
    for (const auto& h : history_)
    {
      out.push_back({h.t, h.event});
    }
    return out;
  }

  void Ledger::append_locked(
    const Event& event,
    const Digest& hash,
    std::optional<StoredAuthorization> authorization,
    SequenceNumber t,
    bool persist)
  {
    const auto index = index_of(event);
    auto body = encode(event);
    auto up = tree_.insert(index, t, hash, body);
    if (persist && log_)
    {
      log_->append(log_event_record(t, event, authorization));
    }
    if (authorization)
    {
      authorizations_.emplace(hash, std::move(*authorization));
    }
    by_index_[index].push_back(history_.size());
    history_.push_back({t, event, hash});
    if (options_.keep_audit_stream)
    {
      audit_.push_back(std::move(up));
    }
    ++events_since_block_;
  }

  Block Ledger::publish_locked()
  {
    const Digest prev = blocks_.empty() ? Digest::zero() : blocks_.back().hash();
    auto b = make_block(
      key_, blocks_.size(), prev, tree_.root(), latest_t(), options_.clock());
    blocks_.push_back(b);
    snapshots_.emplace(b.height, tree_);
    if (options_.keep_audit_stream)
    {
      audit_.push_back(b);
    }
    if (log_)
    {
      log_->append(log_block_record(b));
      log_->sync();
    }
    events_since_block_ = 0;
    return b;
  }

  Block Ledger::publish_block()
  {
    std::unique_lock lock(mutex_);
    return publish_locked();
  }

  std::optional<Block> Ledger::tick()
  {
    std::unique_lock lock(mutex_);
    if (options_.clock() >= blocks_.back().t_utc + options_.block_interval)
    {
      return publish_locked();
    }
    return std::nullopt;
  }

  Block Ledger::latest_block() const
  {
    std::shared_lock lock(mutex_);
    return blocks_.back();
  }

  std::optional<Block> Ledger::block_at(std::uint64_t height) const
  {
    std::shared_lock lock(mutex_);
    if (height >= blocks_.size())
    {
      return std::nullopt;
    }
    return blocks_[height];
  }

  QueryResponse Ledger::query(
    const Digest& index, std::optional<std::uint64_t> height) const
  {
    std::shared_lock lock(mutex_);
    const auto h = height.value_or(blocks_.size() - 1);
    auto it = snapshots_.find(h);
    if (it == snapshots_.end())
    {
      throw std::out_of_range("no block at height " + std::to_string(h));
    }
    return {it->second.lookup(index, true), blocks_[h]};
  }

  SignedAuthorization Ledger::fetch_authorization(const Digest& event_hash) const
  {
    std::optional<StoredAuthorization> found;
    {
      std::shared_lock lock(mutex_);
      auto it = authorizations_.find(event_hash);
      if (it != authorizations_.end())
      {
        found = it->second;
      }
    }
    return sign_authorization(key_, event_hash, std::move(found));
  }

  std::vector<AuditItem> Ledger::audit_items(
    std::size_t cursor, std::size_t max, bool compact_updates) const
  {
    std::shared_lock lock(mutex_);
    std::vector<AuditItem> out;
    for (auto i = cursor; i < audit_.size() && out.size() < max; ++i)
    {
      const auto* up = std::get_if<UpdateProof>(&audit_[i]);
      if (compact_updates && up != nullptr)
      {
        out.push_back(compact(*up));
      }
      else
      {
        out.push_back(audit_[i]);
      }
    }
    return out;
  }

  std::size_t Ledger::audit_size() const
  {
    std::shared_lock lock(mutex_);
    return audit_.size();
  }

  ChainDecision Ledger::internal_check_chain(
    const MemberChain& chain,
    const GroupId& group,
    const Role& role,
    const PublicKey& subject) const
  {
    std::shared_lock lock(mutex_);
    LedgerHistory source(*this);
    return evaluate_chain(source, chain, group, role, subject);
  }

  std::optional<PublicKey> Ledger::active_suspender(const GroupId& group) const
  {
    auto it = by_index_.find(suspension_index(group));
    if (it == by_index_.end() || it->second.empty())
    {
      return std::nullopt;
    }
    const auto& last = history_[it->second.back()].event;
    if (const auto* s = std::get_if<SuspendEvent>(&last))
    {
      return s->issuer;
    }
    return std::nullopt;
  }

  Rejection Ledger::reject(
    RejectReason reason,
    const Digest& hash,
    std::string detail,
    const std::optional<HistoryEntry>& blocking) const
  {
    Rejection r;
    r.reason = reason;
    r.event_hash = hash;
    r.detail = std::move(detail);
    r.t_latest = latest_t();
    if (blocking)
    {
      r.blocking = TimedEvent{blocking->t, blocking->event};
      auto it = authorizations_.find(blocking->hash);
      if (it != authorizations_.end())
      {
        r.blocking_authorization = it->second;
      }
    }
    r.sig = key_.sign(signing_payload(r));
    return r;
  }

  ProofOfDelivery Ledger::pod_for(const Digest& hash) const
  {
    const auto& b = blocks_.back();
    ProofOfDelivery pod{hash, b.height, b.hash(), b.t_latest, b.t_utc, {}};
    pod.sig = key_.sign(signing_payload(pod));
    return pod;
  }

  SubmitResponse Ledger::submit(const SubmitRequest& request)
  {
    const auto& event = request.event;
    const auto hash = event_hash(event);

    // Signature checks need no state; run them outside the lock.
    if (!is_authentic(event))
    {
      std::shared_lock lock(mutex_);
      if (std::holds_alternative<PreimageRevocation>(event))
      {
        return reject(
          RejectReason::bad_preimage, hash, "preimage does not match commitment");
      }
      return reject(RejectReason::bad_signature, hash, "signature does not verify");
    }

    std::unique_lock lock(mutex_);
    const auto index = index_of(event);
    auto at_index = by_index_.find(index);
    if (at_index != by_index_.end())
    {
      for (auto pos : at_index->second)
      {
        if (history_[pos].hash == hash)
        {
          return reject(
            RejectReason::duplicate_event, hash, "event already stored");
        }
      }
    }

    const GroupId* group = group_of(event);
    if (const auto* cr = std::get_if<CertRevocation>(&event); cr && request.scope)
    {
      group = &*request.scope;
    }
    const auto issuer = issuer_of(event);
    std::optional<StoredAuthorization> to_store;

    if (group != nullptr)
    {
      const auto suspender = active_suspender(*group);
      const bool is_resume = std::holds_alternative<ResumeEvent>(event);
      if (suspender && *suspender != *issuer && !is_resume)
      {
        return reject(
          RejectReason::group_suspended,
          hash,
          "group is suspended by " + suspender->hex());
      }
      if (std::holds_alternative<SuspendEvent>(event) && suspender)
      {
        return reject(
          RejectReason::group_suspended, hash, "group is already suspended");
      }
      if (is_resume)
      {
        if (!suspender || *suspender != *issuer)
        {
          return reject(
            RejectReason::unauthorized,
            hash,
            "only the active suspender may resume");
        }
      }
      else
      {
        LedgerHistory source(*this);
        auto decision = evaluate_chain(
          source, request.chain, *group, Role::leader(), *issuer);
        if (!decision.ok())
        {
          return reject(
            RejectReason::unauthorized,
            hash,
            "issuer chain: " + to_string(decision.status) +
              (decision.status == ChainStatus::invalid ?
                 " (" + to_string(decision.general.error) + ")" :
                 ""),
            decision.revocation);
        }
        if (std::holds_alternative<MemberRevocation>(event))
        {
          to_store = StoredAuthorization{std::nullopt, request.chain};
        }
        else if (std::holds_alternative<CertRevocation>(event))
        {
          to_store = StoredAuthorization{*group, request.chain};
        }
      }
    }

    if (
      !std::holds_alternative<PreimageRevocation>(event) &&
      at_index != by_index_.end() && !at_index->second.empty())
    {
      const auto last_t = history_[at_index->second.back()].t;
      if (freshness_of(event) < last_t)
      {
        return reject(
          RejectReason::stale_freshness,
          hash,
          "freshness " + std::to_string(freshness_of(event)) +
            " predates the last event at this index (t = " +
            std::to_string(last_t) + ")");
      }
    }

    auto pod = pod_for(hash);
    append_locked(event, hash, std::move(to_store), latest_t() + 1, true);
    if (events_since_block_ >= options_.block_events)
    {
      publish_locked();
    }
    return pod;
  }

  SequenceNumber Ledger::append_unvalidated(
    const Event& event, std::optional<StoredAuthorization> authorization)
  {
    std::unique_lock lock(mutex_);
    const auto t = latest_t() + 1;
    append_locked(event, event_hash(event), std::move(authorization), t, true);
    return t;
  }
}
