// Copyright (c) The revledger authors. All rights reserved.
// Licensed under the Apache 2.0 License.
#pragma once

#include "revledger/records.hpp"

#include <atomic>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace revledger
{
  class Ledger;

  enum class MessageKind : std::uint64_t
  {
    submit = 1,
    query = 2,
    fetch_auth = 3,
    latest_block = 4,
    subscribe_audit = 5,
    auditor_blocks = 6,
    block_at = 7,
    relay_submit = 8,
  };

  /// No (complete) answer arrived: connection failure or timeout.
  class TransportError : public std::runtime_error
  {
  public:
    using std::runtime_error::runtime_error;
  };

  /// The peer answered with an error status.
  class RemoteError : public std::runtime_error
  {
  public:
    using std::runtime_error::runtime_error;
  };

  // Envelopes. A request is (kind, payload); a response is (status, payload)
  // where a nonzero status carries an error message.

  Bytes make_request(MessageKind kind, ByteView payload);
  std::pair<MessageKind, Bytes> parse_request(ByteView data);
  Bytes ok_response(ByteView payload);
  Bytes error_response(const std::string& message);
  /// Payload of an ok response; throws RemoteError otherwise.
  Bytes unwrap_response(ByteView data);

  /// Frames larger than this are refused.
  constexpr std::size_t max_frame_size = 64 * 1024 * 1024;

  /// 4-byte big-endian length, then the payload. Throws TransportError.
  void write_frame(int fd, ByteView payload);
  /// nullopt on a clean EOF before the length prefix.
  std::optional<Bytes> read_frame(int fd);

  using Handler = std::function<Bytes(ByteView request)>;

  class Transport
  {
  public:
    virtual ~Transport() = default;
    /// One request, one response. Throws TransportError.
    virtual Bytes call(ByteView request) = 0;
  };

  /// Delivers requests to an in-process handler, through the same encoded
  /// messages as the network path.
  class LoopbackTransport : public Transport
  {
  public:
    explicit LoopbackTransport(Handler handler) : handler_(std::move(handler)) {}

    Bytes call(ByteView request) override
    {
      return handler_(request);
    }

  private:
    Handler handler_;
  };

  struct Address
  {
    std::string host = "127.0.0.1";
    std::uint16_t port = 0;
  };

  /// Parses "host:port" or ":port".
  Address parse_address(const std::string& text);

  class TcpTransport : public Transport
  {
  public:
    explicit TcpTransport(Address address, int timeout_ms = 10000);
    ~TcpTransport() override;

    Bytes call(ByteView request) override;

  private:
    void connect_locked();
    void close_locked();

    Address address_;
    int timeout_ms_;
    std::mutex mutex_;
    int fd_ = -1;
  };

  /// Thread-per-connection server; each frame is passed to the handler.
  class TcpServer
  {
  public:
    TcpServer(Address address, Handler handler);
    ~TcpServer();
    TcpServer(const TcpServer&) = delete;
    TcpServer& operator=(const TcpServer&) = delete;

    /// Bound port; useful when listening on port 0.
    std::uint16_t port() const
    {
      return port_;
    }
    void stop();

  private:
    void accept_loop();
    void serve(int fd);

    Handler handler_;
    int listen_fd_ = -1;
    std::uint16_t port_ = 0;
    std::atomic<bool> stopping_ = false;
    std::thread acceptor_;
    std::mutex connections_mutex_;
    std::vector<std::thread> connections_;
    std::vector<int> connection_fds_;
  };

  /// What clients and auditors need from a ledger.
  class LedgerApi
  {
  public:
    virtual ~LedgerApi() = default;

    virtual SubmitResponse submit(const SubmitRequest& request) = 0;
    virtual QueryResponse query(
      const Digest& index, std::optional<std::uint64_t> height) = 0;
    virtual SignedAuthorization fetch_authorization(const Digest& event_hash) = 0;
    virtual Block latest_block() = 0;
    virtual std::optional<Block> block_at(std::uint64_t height) = 0;
    virtual std::vector<AuditItem> audit_items(
      std::size_t cursor, std::size_t max, bool compact_updates) = 0;
  };

  class LocalLedger : public LedgerApi
  {
  public:
    explicit LocalLedger(Ledger& ledger) : ledger_(ledger) {}

    SubmitResponse submit(const SubmitRequest& request) override;
    QueryResponse query(
      const Digest& index, std::optional<std::uint64_t> height) override;
    SignedAuthorization fetch_authorization(const Digest& event_hash) override;
    Block latest_block() override;
    std::optional<Block> block_at(std::uint64_t height) override;
    std::vector<AuditItem> audit_items(
      std::size_t cursor, std::size_t max, bool compact_updates) override;

  private:
    Ledger& ledger_;
  };

  class RemoteLedger : public LedgerApi
  {
  public:
    explicit RemoteLedger(std::shared_ptr<Transport> transport) :
      transport_(std::move(transport))
    {}

    SubmitResponse submit(const SubmitRequest& request) override;
    QueryResponse query(
      const Digest& index, std::optional<std::uint64_t> height) override;
    SignedAuthorization fetch_authorization(const Digest& event_hash) override;
    Block latest_block() override;
    std::optional<Block> block_at(std::uint64_t height) override;
    std::vector<AuditItem> audit_items(
      std::size_t cursor, std::size_t max, bool compact_updates) override;

  private:
    Bytes call(MessageKind kind, ByteView payload);

    std::shared_ptr<Transport> transport_;
  };

  /// Serves SUBMIT, QUERY, FETCH_AUTH, LATEST_BLOCK, BLOCK_AT and
  /// SUBSCRIBE_AUDIT from `api`.
  Handler ledger_handler(LedgerApi& api);

  /// An auditor's signature on a block it verified.
  struct Endorsement
  {
    Block block;
    PublicKey auditor;
    Signature sig;

    bool operator==(const Endorsement&) const = default;
  };

  Bytes signing_payload(const Endorsement& e);
  bool verify_endorsement(const Endorsement& e);
  Bytes encode(const Endorsement& e);
  Endorsement decode_endorsement(ByteView data);

  /// What clients need from an auditor.
  class AuditorApi
  {
  public:
    virtual ~AuditorApi() = default;

    /// Endorsements in increasing height.
    virtual std::vector<Endorsement> endorsed_blocks() = 0;
    /// Resubmits on the client's behalf.
    virtual SubmitResponse relay_submit(const SubmitRequest& request) = 0;
  };

  class RemoteAuditor : public AuditorApi
  {
  public:
    explicit RemoteAuditor(std::shared_ptr<Transport> transport) :
      transport_(std::move(transport))
    {}

    std::vector<Endorsement> endorsed_blocks() override;
    SubmitResponse relay_submit(const SubmitRequest& request) override;

  private:
    std::shared_ptr<Transport> transport_;
  };

  /// Serves AUDITOR_BLOCKS and RELAY_SUBMIT from `api`.
  Handler auditor_handler(AuditorApi& api);

  // Lists of encoded items.
  Bytes encode_list(const std::vector<Bytes>& items);
  std::vector<Bytes> decode_list(ByteView data);
}
