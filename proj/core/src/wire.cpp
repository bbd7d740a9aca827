// Copyright (c) The revledger authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "revledger/wire.hpp"

#include "revledger/encoding.hpp"
#include "revledger/ledger.hpp"

#include <arpa/inet.h>
#include <cerrno>
#include <cstring>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

namespace revledger
{
  Bytes make_request(MessageKind kind, ByteView payload)
  {
    return Encoder(TypeTag::request)
      .u64(static_cast<std::uint64_t>(kind))
      .field(payload)
      .take();
  }

  std::pair<MessageKind, Bytes> parse_request(ByteView data)
  {
    Decoder d(data, TypeTag::request);
    const auto kind = d.u64();
    auto payload = d.field();
    d.finish();
    if (kind < 1 || kind > 8)
    {
      throw DecodeError("unknown message kind " + std::to_string(kind));
    }
    return {static_cast<MessageKind>(kind), Bytes(payload.begin(), payload.end())};
  }

  Bytes ok_response(ByteView payload)
  {
    return Encoder(TypeTag::envelope).u64(0).field(payload).take();
  }

  Bytes error_response(const std::string& message)
  {
    return Encoder(TypeTag::envelope).u64(1).field(message).take();
  }

  Bytes unwrap_response(ByteView data)
  {
    Decoder d(data, TypeTag::envelope);
    const auto status = d.u64();
    auto payload = d.field();
    d.finish();
    if (status != 0)
    {
      throw RemoteError(std::string(payload.begin(), payload.end()));
    }
    return Bytes(payload.begin(), payload.end());
  }

  Bytes encode_list(const std::vector<Bytes>& items)
  {
    Encoder e(TypeTag::item_list);
    e.u64(items.size());
    for (const auto& i : items)
    {
      e.field(i);
    }
    return e.take();
  }

  std::vector<Bytes> decode_list(ByteView data)
  {
    Decoder d(data, TypeTag::item_list);
    const auto n = d.u64();
    if (n > data.size())
    {
      throw DecodeError("list count exceeds input");
    }
    std::vector<Bytes> items;
    items.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i)
    {
      auto f = d.field();
      items.emplace_back(f.begin(), f.end());
    }
    d.finish();
    return items;
  }

  // Framing.

  namespace
  {
    bool write_all(int fd, const std::uint8_t* p, std::size_t n)
    {
      while (n > 0)
      {
        const auto w = ::send(fd, p, n, MSG_NOSIGNAL);
        if (w < 0)
        {
          if (errno == EINTR)
          {
            continue;
          }
          return false;
        }
        p += w;
        n -= static_cast<std::size_t>(w);
      }
      return true;
    }

    // Returns the number of bytes read before EOF, or -1 on error.
    long read_all(int fd, std::uint8_t* p, std::size_t n)
    {
      std::size_t got = 0;
      while (got < n)
      {
        const auto r = ::recv(fd, p + got, n - got, 0);
        if (r < 0)
        {
          if (errno == EINTR)
          {
            continue;
          }
          return -1;
        }
        if (r == 0)
        {
          break;
        }
        got += static_cast<std::size_t>(r);
      }
      return static_cast<long>(got);
    }
  }

  void write_frame(int fd, ByteView payload)
  {
    if (payload.size() > max_frame_size)
    {
      throw TransportError("frame too large");
    }
    Bytes framed;
    framed.reserve(payload.size() + 4);
    put_u32(framed, static_cast<std::uint32_t>(payload.size()));
    framed.insert(framed.end(), payload.begin(), payload.end());
    if (!write_all(fd, framed.data(), framed.size()))
    {
      throw TransportError(std::string("send failed: ") + std::strerror(errno));
    }
  }

  std::optional<Bytes> read_frame(int fd)
  {
    std::uint8_t prefix[4];
    const auto got = read_all(fd, prefix, 4);
    if (got == 0)
    {
      return std::nullopt;
    }
    if (got != 4)
    {
      throw TransportError("connection closed inside a frame header");
    }
    const auto len = get_u32(prefix);
    if (len > max_frame_size)
    {
      throw TransportError("frame too large");
    }
    Bytes payload(len);
    if (read_all(fd, payload.data(), len) != static_cast<long>(len))
    {
      throw TransportError("connection closed inside a frame");
    }
    return payload;
  }

  Address parse_address(const std::string& text)
  {
    Address a;
    const auto colon = text.rfind(':');
    if (colon == std::string::npos)
    {
      throw std::invalid_argument("address must be host:port: " + text);
    }
    if (colon > 0)
    {
      a.host = text.substr(0, colon);
    }
    const auto port = std::stoul(text.substr(colon + 1));
    if (port > 65535)
    {
      throw std::invalid_argument("port out of range: " + text);
    }
    a.port = static_cast<std::uint16_t>(port);
    return a;
  }

  // TCP client.

  TcpTransport::TcpTransport(Address address, int timeout_ms) :
    address_(std::move(address)),
    timeout_ms_(timeout_ms)
  {}

  TcpTransport::~TcpTransport()
  {
    std::lock_guard lock(mutex_);
    close_locked();
  }

  void TcpTransport::close_locked()
  {
    if (fd_ >= 0)
    {
      ::close(fd_);
      fd_ = -1;
    }
  }

  void TcpTransport::connect_locked()
  {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    const auto port = std::to_string(address_.port);
    if (::getaddrinfo(address_.host.c_str(), port.c_str(), &hints, &res) != 0)
    {
      throw TransportError("cannot resolve " + address_.host);
    }
    for (auto* ai = res; ai != nullptr; ai = ai->ai_next)
    {
      const int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
      if (fd < 0)
      {
        continue;
      }
      timeval tv{timeout_ms_ / 1000, (timeout_ms_ % 1000) * 1000};
      ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
      ::setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof(tv));
      int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0)
      {
        fd_ = fd;
        break;
      }
      ::close(fd);
    }
    ::freeaddrinfo(res);
    if (fd_ < 0)
    {
      throw TransportError(
        "cannot connect to " + address_.host + ":" + port);
    }
  }

  Bytes TcpTransport::call(ByteView request)
  {
    std::lock_guard lock(mutex_);
    // One reconnect attempt covers a server-side idle close.
    for (int attempt = 0; attempt < 2; ++attempt)
    {
      if (fd_ < 0)
      {
        connect_locked();
      }
      try
      {
        write_frame(fd_, request);
        auto response = read_frame(fd_);
        if (response)
        {
          return std::move(*response);
        }
      }
      catch (const TransportError&)
      {
        if (attempt == 1)
        {
          close_locked();
          throw;
        }
      }
      close_locked();
    }
    throw TransportError("no response from " + address_.host);
  }

  // TCP server.

  TcpServer::TcpServer(Address address, Handler handler) :
    handler_(std::move(handler))
  {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0)
    {
      throw std::runtime_error("socket failed");
    }
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(address.port);
    if (address.host.empty() || address.host == "0.0.0.0")
    {
      addr.sin_addr.s_addr = htonl(INADDR_ANY);
    }
    else if (address.host == "localhost")
    {
      addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    }
    else if (::inet_pton(AF_INET, address.host.c_str(), &addr.sin_addr) != 1)
    {
      ::close(listen_fd_);
      throw std::invalid_argument("not an IPv4 address: " + address.host);
    }
    if (
      ::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
      ::listen(listen_fd_, 64) != 0)
    {
      const std::string err = std::strerror(errno);
      ::close(listen_fd_);
      throw std::runtime_error("cannot listen: " + err);
    }
    socklen_t len = sizeof(addr);
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    acceptor_ = std::thread([this] { accept_loop(); });
  }

  TcpServer::~TcpServer()
  {
    stop();
  }

  void TcpServer::stop()
  {
    if (stopping_.exchange(true))
    {
      return;
    }
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    if (acceptor_.joinable())
    {
      acceptor_.join();
    }
    std::vector<std::thread> threads;
    {
      std::lock_guard lock(connections_mutex_);
      for (auto fd : connection_fds_)
      {
        ::shutdown(fd, SHUT_RDWR);
      }
      threads.swap(connections_);
    }
    for (auto& t : threads)
    {
      t.join();
    }
  }

  void TcpServer::accept_loop()
  {
    while (!stopping_)
    {
      const int fd = ::accept(listen_fd_, nullptr, nullptr);
      if (fd < 0)
      {
        if (errno == EINTR)
        {
          continue;
        }
        return;
      }
      int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      std::lock_guard lock(connections_mutex_);
      if (stopping_)
      {
        ::close(fd);
        return;
      }
      connection_fds_.push_back(fd);
      connections_.emplace_back([this, fd] { serve(fd); });
    }
  }

  void TcpServer::serve(int fd)
  {
    try
    {
      while (auto request = read_frame(fd))
      {
        write_frame(fd, handler_(*request));
      }
    }
    catch (const TransportError&)
    {
      // Peer went away mid-frame.
    }
    ::close(fd);
  }

  // Ledger API.

  SubmitResponse LocalLedger::submit(const SubmitRequest& request)
  {
    return ledger_.submit(request);
  }

  QueryResponse LocalLedger::query(
    const Digest& index, std::optional<std::uint64_t> height)
  {
    return ledger_.query(index, height);
  }

  SignedAuthorization LocalLedger::fetch_authorization(const Digest& event_hash)
  {
    return ledger_.fetch_authorization(event_hash);
  }

  Block LocalLedger::latest_block()
  {
    return ledger_.latest_block();
  }

  std::optional<Block> LocalLedger::block_at(std::uint64_t height)
  {
    return ledger_.block_at(height);
  }

  std::vector<AuditItem> LocalLedger::audit_items(
    std::size_t cursor, std::size_t max, bool compact_updates)
  {
    return ledger_.audit_items(cursor, max, compact_updates);
  }

  namespace
  {
    Bytes query_payload(const Digest& index, std::optional<std::uint64_t> height)
    {
      return Encoder(TypeTag::query)
        .field(index)
        .flag(height.has_value())
        .u64(height.value_or(0))
        .take();
    }

    Bytes u64_payload(std::uint64_t v)
    {
      Bytes b;
      put_u64(b, v);
      return b;
    }

    std::uint64_t parse_u64(ByteView b)
    {
      if (b.size() != 8)
      {
        throw DecodeError("expected an 8-byte integer");
      }
      return get_u64(b.data());
    }

    Bytes cursor_payload(std::size_t cursor, std::size_t max, bool compact)
    {
      Bytes b;
      put_u64(b, cursor);
      put_u64(b, max);
      put_u64(b, compact ? 1 : 0);
      return b;
    }

    Digest parse_digest(ByteView b)
    {
      return Digest::from_view(b);
    }

    template <typename F>
    Handler guarded(F f)
    {
      return [f = std::move(f)](ByteView raw) -> Bytes {
        try
        {
          auto [kind, payload] = parse_request(raw);
          return ok_response(f(kind, payload));
        }
        catch (const std::exception& e)
        {
          return error_response(e.what());
        }
      };
    }
  }

  Bytes RemoteLedger::call(MessageKind kind, ByteView payload)
  {
    return unwrap_response(transport_->call(make_request(kind, payload)));
  }

  SubmitResponse RemoteLedger::submit(const SubmitRequest& request)
  {
    return decode_submit_response(call(MessageKind::submit, encode(request)));
  }

  QueryResponse RemoteLedger::query(
    const Digest& index, std::optional<std::uint64_t> height)
  {
    return decode_query_response(
      call(MessageKind::query, query_payload(index, height)));
  }

  SignedAuthorization RemoteLedger::fetch_authorization(const Digest& event_hash)
  {
    return decode_signed_authorization(
      call(MessageKind::fetch_auth, event_hash.view()));
  }

  Block RemoteLedger::latest_block()
  {
    return decode_block(call(MessageKind::latest_block, {}));
  }

  std::optional<Block> RemoteLedger::block_at(std::uint64_t height)
  {
    auto items = decode_list(call(MessageKind::block_at, u64_payload(height)));
    if (items.empty())
    {
      return std::nullopt;
    }
    return decode_block(items.at(0));
  }

  std::vector<AuditItem> RemoteLedger::audit_items(
    std::size_t cursor, std::size_t max, bool compact_updates)
  {
    std::vector<AuditItem> out;
    for (const auto& item : decode_list(call(
           MessageKind::subscribe_audit,
           cursor_payload(cursor, max, compact_updates))))
    {
      out.push_back(decode_audit_item(item));
    }
    return out;
  }

  Handler ledger_handler(LedgerApi& api)
  {
    return guarded([&api](MessageKind kind, ByteView payload) -> Bytes {
      switch (kind)
      {
        case MessageKind::submit:
          return encode(api.submit(decode_submit_request(payload)));
        case MessageKind::query:
        {
          Decoder d(payload, TypeTag::query);
          const auto index = d.digest_field();
          const bool has_height = d.flag();
          const auto height = d.u64();
          d.finish();
          return encode(api.query(
            index, has_height ? std::optional(height) : std::nullopt));
        }
        case MessageKind::fetch_auth:
          return encode(api.fetch_authorization(parse_digest(payload)));
        case MessageKind::latest_block:
          return encode(api.latest_block());
        case MessageKind::block_at:
        {
          std::vector<Bytes> items;
          if (auto b = api.block_at(parse_u64(payload)))
          {
            items.push_back(encode(*b));
          }
          return encode_list(items);
        }
        case MessageKind::subscribe_audit:
        {
          if (payload.size() != 24)
          {
            throw DecodeError("expected cursor, count and form");
          }
          const auto cursor = get_u64(payload.data());
          const auto max = std::min<std::uint64_t>(get_u64(payload.data() + 8), 100000);
          const bool compact = get_u64(payload.data() + 16) != 0;
          std::vector<Bytes> items;
          for (const auto& item : api.audit_items(cursor, max, compact))
          {
            items.push_back(encode(item));
          }
          return encode_list(items);
        }
        default:
          throw std::invalid_argument("not a ledger message");
      }
    });
  }

  // Endorsements and the auditor API.

  Bytes signing_payload(const Endorsement& e)
  {
    return Encoder(TypeTag::endorsement)
      .u64(e.block.height)
      .field(e.block.hash())
      .field(e.auditor)
      .take();
  }

  bool verify_endorsement(const Endorsement& e)
  {
    return verify(e.auditor, signing_payload(e), e.sig);
  }

  Bytes encode(const Endorsement& e)
  {
    return Encoder(TypeTag::endorsement)
      .field(encode(e.block))
      .field(e.auditor)
      .field(e.sig)
      .take();
  }

  Endorsement decode_endorsement(ByteView data)
  {
    Decoder d(data, TypeTag::endorsement);
    Endorsement e;
    e.block = decode_block(d.field());
    e.auditor = d.key_field();
    e.sig = d.signature_field();
    d.finish();
    return e;
  }

  std::vector<Endorsement> RemoteAuditor::endorsed_blocks()
  {
    auto payload = unwrap_response(
      transport_->call(make_request(MessageKind::auditor_blocks, {})));
    std::vector<Endorsement> out;
    for (const auto& item : decode_list(payload))
    {
      out.push_back(decode_endorsement(item));
    }
    return out;
  }

  SubmitResponse RemoteAuditor::relay_submit(const SubmitRequest& request)
  {
    return decode_submit_response(unwrap_response(transport_->call(
      make_request(MessageKind::relay_submit, encode(request)))));
  }

  Handler auditor_handler(AuditorApi& api)
  {
    return guarded([&api](MessageKind kind, ByteView payload) -> Bytes {
      switch (kind)
      {
        case MessageKind::auditor_blocks:
        {
          std::vector<Bytes> items;
          for (const auto& e : api.endorsed_blocks())
          {
            items.push_back(encode(e));
          }
          return encode_list(items);
        }
        case MessageKind::relay_submit:
          return encode(api.relay_submit(decode_submit_request(payload)));
        default:
          throw std::invalid_argument("not an auditor message");
      }
    });
  }
}
