#include "collcast/tcp_transport.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

namespace collcast {

namespace {

void write_all(int fd, const void* data, std::size_t len) {
  const char* p = static_cast<const char*>(data);
  while (len > 0) {
    ssize_t n = ::write(fd, p, len);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError(std::string("tcp write failed: ") +
                           std::strerror(errno));
    }
    p += n;
    len -= static_cast<std::size_t>(n);
  }
}

// Returns false on clean EOF at a frame boundary.
bool read_all(int fd, void* data, std::size_t len) {
  char* p = static_cast<char*>(data);
  std::size_t got = 0;
  while (got < len) {
    ssize_t n = ::read(fd, p + got, len - got);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError(std::string("tcp read failed: ") +
                           std::strerror(errno));
    }
    if (n == 0) {
      if (got == 0) return false;
      throw TransportError("tcp peer closed mid-frame");
    }
    got += static_cast<std::size_t>(n);
  }
  return true;
}

void put_le32(std::uint8_t* out, std::uint32_t v) {
  out[0] = static_cast<std::uint8_t>(v);
  out[1] = static_cast<std::uint8_t>(v >> 8);
  out[2] = static_cast<std::uint8_t>(v >> 16);
  out[3] = static_cast<std::uint8_t>(v >> 24);
}

std::uint32_t get_le32(const std::uint8_t* in) {
  return static_cast<std::uint32_t>(in[0]) |
         static_cast<std::uint32_t>(in[1]) << 8 |
         static_cast<std::uint32_t>(in[2]) << 16 |
         static_cast<std::uint32_t>(in[3]) << 24;
}

sockaddr_in resolve(const RankTable::Entry& entry) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(entry.port);
  if (::inet_pton(AF_INET, entry.host.c_str(), &addr.sin_addr) != 1)
    throw TransportError("rank table: bad IPv4 address " + entry.host);
  return addr;
}

}  // namespace

RankTable RankTable::parse(std::istream& in) {
  RankTable table;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    int rank;
    std::string addr;
    if (!(ls >> rank >> addr))
      throw std::invalid_argument("rank table: bad line: " + line);
    auto colon = addr.rfind(':');
    if (colon == std::string::npos)
      throw std::invalid_argument("rank table: missing port: " + line);
    Entry entry;
    entry.host = addr.substr(0, colon);
    entry.port = static_cast<std::uint16_t>(std::stoi(addr.substr(colon + 1)));
    if (rank != table.size())
      throw std::invalid_argument("rank table: ranks must be 0..P-1 in order");
    table.entries.push_back(std::move(entry));
  }
  if (table.entries.empty())
    throw std::invalid_argument("rank table: empty");
  return table;
}

RankTable RankTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("rank table: cannot open " + path);
  return parse(in);
}

RankTable RankTable::loopback(int nranks) {
  if (nranks < 1) throw std::invalid_argument("rank table: need >= 1 rank");
  RankTable table;
  std::vector<int> probes;
  for (int r = 0; r < nranks; ++r) {
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw TransportError("socket() failed");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
      ::close(fd);
      throw TransportError("bind() failed while probing for a free port");
    }
    socklen_t len = sizeof(addr);
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
    table.entries.push_back({"127.0.0.1", ntohs(addr.sin_port)});
    probes.push_back(fd);
  }
  for (int fd : probes) ::close(fd);
  return table;
}

TcpFabric::TcpFabric(const RankTable& table) {
  for (int r = 0; r < table.size(); ++r)
    endpoints_.emplace_back(new TcpEndpoint(table, r));
}

TcpFabric::~TcpFabric() { close(); }

Transport& TcpFabric::endpoint(int rank) { return *endpoints_.at(rank); }

void TcpFabric::connect() {
  if (connected_) return;
  for (auto& ep : endpoints_) ep->listen();
  // Dialing blocks until the peer accepts, so run accept loops alongside.
  std::vector<std::thread> acceptors;
  acceptors.reserve(endpoints_.size());
  for (auto& ep : endpoints_)
    acceptors.emplace_back([&ep] { ep->accept_peers(); });
  for (auto& ep : endpoints_) ep->dial_peers();
  for (auto& t : acceptors) t.join();
  connected_ = true;
}

void TcpFabric::close() {
  for (auto& ep : endpoints_) ep->close();
}

TcpEndpoint::TcpEndpoint(const RankTable& table, int rank)
    : table_(table), rank_(rank) {
  const int n = table.size();
  send_fds_.assign(n, -1);
  recv_fds_.assign(n, -1);
  counters_.assign(n, LinkCounter{});
  for (int i = 0; i < n; ++i) {
    inbox_.push_back(std::make_unique<Mailbox>());
    send_mutex_.push_back(std::make_unique<std::mutex>());
  }
}

TcpEndpoint::~TcpEndpoint() { close(); }

void TcpEndpoint::listen() {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw TransportError("socket() failed");
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr = resolve(table_.entries[rank_]);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0)
    throw TransportError("bind failed for rank " + std::to_string(rank_) +
                         ": " + std::strerror(errno));
  if (::listen(listen_fd_, table_.size()) != 0)
    throw TransportError("listen failed");
}

void TcpEndpoint::dial_peers() {
  using namespace std::chrono_literals;
  for (int dst = 0; dst < table_.size(); ++dst) {
    if (dst == rank_) continue;
    sockaddr_in addr = resolve(table_.entries[dst]);
    int fd = -1;
    for (int attempt = 0; attempt < 100; ++attempt) {
      fd = ::socket(AF_INET, SOCK_STREAM, 0);
      if (fd < 0) throw TransportError("socket() failed");
      if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0)
        break;
      ::close(fd);
      fd = -1;
      std::this_thread::sleep_for(100ms);
    }
    if (fd < 0)
      throw TransportError("cannot connect to rank " + std::to_string(dst));
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    std::uint8_t hello[4];
    put_le32(hello, static_cast<std::uint32_t>(rank_));
    write_all(fd, hello, sizeof(hello));
    send_fds_[dst] = fd;
  }
}

void TcpEndpoint::accept_peers() {
  for (int i = 0; i < table_.size() - 1; ++i) {
    int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) throw TransportError("accept failed");
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    std::uint8_t hello[4];
    if (!read_all(fd, hello, sizeof(hello)))
      throw TransportError("peer closed before handshake");
    int src = static_cast<int>(get_le32(hello));
    if (src < 0 || src >= table_.size() || src == rank_ ||
        recv_fds_[src] != -1)
      throw TransportError("bad handshake rank id");
    recv_fds_[src] = fd;
    readers_.emplace_back([this, src, fd] { reader_loop(src, fd); });
  }
}

void TcpEndpoint::reader_loop(int src, int fd) {
  try {
    for (;;) {
      std::uint8_t header[8];
      if (!read_all(fd, header, sizeof(header))) break;
      Envelope envelope;
      envelope.src = src;
      envelope.dst = rank_;
      std::uint32_t len = get_le32(header);
      envelope.tag = static_cast<int>(get_le32(header + 4));
      envelope.payload.resize(len);
      if (len > 0 && !read_all(fd, envelope.payload.data(), len))
        throw TransportError("tcp peer closed mid-frame");
      inbox_[src]->push(std::move(envelope));
    }
  } catch (const TransportError&) {
    // fall through to closing the mailbox; the blocked recv sees
    // TransportClosed and reports peer failure
  }
  inbox_[src]->close();
}

void TcpEndpoint::send(int dst, int tag, std::span<const std::uint8_t> payload) {
  if (dst < 0 || dst >= table_.size())
    throw TransportError("send: unknown destination");
  if (dst == rank_) throw TransportError("send: self-send rejected");
  if (send_fds_[dst] < 0) throw TransportError("send: not connected");

  Envelope envelope{rank_, dst, tag,
                    std::vector<std::uint8_t>(payload.begin(), payload.end())};
  if (tap_) tap_(envelope);

  std::uint8_t header[8];
  put_le32(header, static_cast<std::uint32_t>(envelope.payload.size()));
  put_le32(header + 4, static_cast<std::uint32_t>(envelope.tag));
  {
    std::lock_guard lock(*send_mutex_[dst]);
    write_all(send_fds_[dst], header, sizeof(header));
    if (!envelope.payload.empty())
      write_all(send_fds_[dst], envelope.payload.data(),
                envelope.payload.size());
  }

  LinkCounter& counter = counters_[dst];
  counter.messages += 1;
  counter.bytes += envelope.payload.size();
  if (envelope.payload.empty()) counter.zero_length += 1;
}

void TcpEndpoint::recv(int src, int tag, std::span<std::uint8_t> out) {
  if (src < 0 || src >= table_.size())
    throw TransportError("recv: unknown source");
  if (src == rank_) throw TransportError("recv: self-receive rejected");
  Envelope envelope = inbox_[src]->pop_matching(tag);
  if (envelope.payload.size() != out.size())
    throw TransportError("recv: payload length mismatch");
  if (!out.empty())
    std::memcpy(out.data(), envelope.payload.data(), out.size());
}

void TcpEndpoint::reset_counters() {
  std::fill(counters_.begin(), counters_.end(), LinkCounter{});
}

void TcpEndpoint::close() {
  if (closed_) return;
  closed_ = true;
  for (int& fd : send_fds_)
    if (fd >= 0) {
      ::shutdown(fd, SHUT_RDWR);
      ::close(fd);
      fd = -1;
    }
  if (listen_fd_ >= 0) {
    ::close(listen_fd_);
    listen_fd_ = -1;
  }
  // Force reader loops off their blocking reads even if peers are still up.
  for (int fd : recv_fds_)
    if (fd >= 0) ::shutdown(fd, SHUT_RD);
  for (auto& t : readers_)
    if (t.joinable()) t.join();
  for (int& fd : recv_fds_)
    if (fd >= 0) {
      ::close(fd);
      fd = -1;
    }
  for (auto& box : inbox_) box->close();
}

}  // namespace collcast
