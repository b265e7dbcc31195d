#include "swapnet/server.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <list>
#include <stdexcept>

#include "swapnet/value.hpp"

namespace swapnet {

namespace {

constexpr int kMutantNonzeroStore = 1;
constexpr int kMutantShortComplete = 2;
constexpr int kMutantEchoReply = 3;
constexpr int kMutantEarlyReply = 4;
constexpr int kMutantDoubleReply = 5;
constexpr int kMutantMisroutedReply = 6;
constexpr int kMutantNoStore = 7;
constexpr int kMutantStoreFirst = 8;
constexpr int kMutantShortReply = 9;
constexpr int kMutantListCorruption = 10;
constexpr int kMutantRecvZeroAsData = 11;
constexpr int kMutantStaleRequestBuf = 12;

const std::vector<MutantInfo> kMutants = {
    {kMutantNonzeroStore, "stored message not initialized to zeros"},
    {kMutantShortComplete, "request treated as complete one byte early"},
    {kMutantEchoReply, "reply echoes the request instead of the stored message"},
    {kMutantEarlyReply, "reply sent as soon as the first request byte arrives"},
    {kMutantDoubleReply, "reply enqueued twice per swap"},
    {kMutantMisroutedReply, "reply routed to the most recently accepted other connection"},
    {kMutantNoStore, "stored message never updated"},
    {kMutantStoreFirst, "store updated before the reply is captured"},
    {kMutantShortReply, "last byte of every reply dropped"},
    {kMutantListCorruption,
     "third accept corrupts the connection list: the newest old connection is dropped and "
     "its pending reply is flushed to the newly accepted socket"},
    {kMutantRecvZeroAsData, "recv return value of 0 treated as one byte of data"},
    {kMutantStaleRequestBuf, "request buffer offset not reset between messages"},
};

struct LiveConn {
    int fd = -1;
    ConnectionId id = 0;
    bool sending = false;    // SENDING state: a reply must drain before the next request
    bool premature = false;  // early-reply mutant already answered the in-flight request
    Bytes request_buf;
    Bytes response_buf;
    bool deleted = false;
};

void set_nonblocking(int fd) {
    int flags = fcntl(fd, F_GETFL, 0);
    fcntl(fd, F_SETFL, flags | O_NONBLOCK);
}

class EffectLog {
  public:
    explicit EffectLog(const std::string& path) {
        if (!path.empty()) file_ = std::fopen(path.c_str(), "a");
    }
    ~EffectLog() {
        if (file_) std::fclose(file_);
    }
    void accept(ConnectionId id) { line('C', id, nullptr, 0); }
    void received(ConnectionId id, const Byte* data, std::size_t n) { line('S', id, data, n); }
    void sent(ConnectionId id, const Byte* data, std::size_t n) { line('F', id, data, n); }

  private:
    void line(char tag, ConnectionId id, const Byte* data, std::size_t n) {
        if (!file_) return;
        if (tag == 'C') {
            std::fprintf(file_, "C %lld\n", static_cast<long long>(id));
        } else {
            for (std::size_t i = 0; i < n; ++i) {
                std::fprintf(file_, "%c %lld %02x\n", tag, static_cast<long long>(id), data[i]);
            }
        }
        std::fflush(file_);
    }
    std::FILE* file_ = nullptr;
};

struct ServerLoop {
    const ServerConfig& cfg;
    EffectLog log;
    int listener = -1;
    std::list<LiveConn> conns;  // newest first, as in the classic linked-list server
    Bytes stored;
    ConnectionId next_id = 1;
    std::size_t accept_count = 0;

    explicit ServerLoop(const ServerConfig& c) : cfg(c), log(c.log_effects_path) {
        stored.assign(cfg.message_size,
                      cfg.mutant == kMutantNonzeroStore ? Byte{'x'} : Byte{0x00});
    }

    ~ServerLoop() {
        for (LiveConn& c : conns) {
            if (c.fd >= 0) ::close(c.fd);
        }
        if (listener >= 0) ::close(listener);
    }

    std::size_t live_count() const {
        std::size_t n = 0;
        for (const LiveConn& c : conns) {
            if (!c.deleted) ++n;
        }
        return n;
    }

    void drop(LiveConn& c) {
        if (c.fd >= 0) ::close(c.fd);
        c.fd = -1;
        c.deleted = true;
    }

    std::size_t complete_threshold() const {
        if (cfg.mutant == kMutantShortComplete && cfg.message_size > 1) {
            return cfg.message_size - 1;
        }
        return cfg.message_size;
    }

    void enqueue_reply(LiveConn& conn, const Bytes& completed) {
        Bytes reply = stored;
        if (cfg.mutant == kMutantEchoReply) {
            reply = completed;
        } else if (cfg.mutant == kMutantStoreFirst) {
            stored = completed;  // swapped statements: store before capturing the reply
            reply = stored;
        } else if (cfg.mutant == kMutantShortReply && !reply.empty()) {
            reply.pop_back();
        } else if (cfg.mutant == kMutantDoubleReply) {
            reply.insert(reply.end(), stored.begin(), stored.end());
        }

        if (cfg.mutant != kMutantEchoReply && cfg.mutant != kMutantNoStore &&
            cfg.mutant != kMutantStoreFirst) {
            stored = completed;
        }

        LiveConn* target = &conn;
        if (cfg.mutant == kMutantMisroutedReply) {
            for (LiveConn& other : conns) {
                if (!other.deleted && other.id != conn.id) {
                    target = &other;
                    break;  // conns is newest-first, so this is the latest accept
                }
            }
        }
        target->response_buf.insert(target->response_buf.end(), reply.begin(), reply.end());
        if (target == &conn) conn.sending = true;
    }

    void on_request_bytes(LiveConn& conn, const Byte* data, std::size_t n) {
        bool was_empty = conn.request_buf.empty();
        if (cfg.mutant == kMutantStaleRequestBuf &&
            conn.request_buf.size() >= cfg.message_size) {
            // Bytes land past the end of the never-reset buffer and are lost.
        } else {
            conn.request_buf.insert(conn.request_buf.end(), data, data + n);
        }

        if (cfg.mutant == kMutantEarlyReply && was_empty &&
            conn.request_buf.size() < complete_threshold()) {
            conn.response_buf.insert(conn.response_buf.end(), stored.begin(), stored.end());
            conn.premature = true;
        }

        if (conn.request_buf.size() >= complete_threshold()) {
            Bytes completed(conn.request_buf.begin(),
                            conn.request_buf.begin() +
                                static_cast<std::ptrdiff_t>(complete_threshold()));
            if (conn.premature) {
                stored = completed;  // the reply already went out on the first byte
                conn.premature = false;
            } else {
                enqueue_reply(conn, completed);
            }
            if (cfg.mutant != kMutantStaleRequestBuf) {
                conn.request_buf.erase(conn.request_buf.begin(),
                                       conn.request_buf.begin() +
                                           static_cast<std::ptrdiff_t>(complete_threshold()));
            }
        }
    }

    void accept_one() {
        int fd = ::accept(listener, nullptr, nullptr);
        if (fd < 0) return;
        set_nonblocking(fd);
        int one = 1;
        setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);

        LiveConn fresh;
        fresh.fd = fd;
        fresh.id = next_id++;
        ++accept_count;
        log.accept(fresh.id);

        if (cfg.mutant == kMutantListCorruption && accept_count >= 3) {
            for (LiveConn& victim : conns) {
                if (victim.deleted) continue;
                fresh.response_buf = victim.response_buf;  // inherited through the bad link
                drop(victim);
                break;
            }
        }
        conns.push_front(std::move(fresh));
    }

    void flush_response(LiveConn& conn) {
        if (conn.response_buf.empty()) return;
        ssize_t n = ::send(conn.fd, conn.response_buf.data(), conn.response_buf.size(),
                           MSG_NOSIGNAL);
        if (n > 0) {
            log.sent(conn.id, conn.response_buf.data(), static_cast<std::size_t>(n));
            conn.response_buf.erase(conn.response_buf.begin(), conn.response_buf.begin() + n);
            if (conn.response_buf.empty()) conn.sending = false;
        } else if (n < 0 && errno != EAGAIN && errno != EWOULDBLOCK) {
            drop(conn);
        }
    }

    void read_request(LiveConn& conn) {
        std::size_t want = cfg.message_size > conn.request_buf.size()
                               ? cfg.message_size - conn.request_buf.size()
                               : cfg.message_size;  // stale-buffer mutant keeps reading
        Byte buf[512];
        if (want > sizeof buf) want = sizeof buf;
        ssize_t n = ::recv(conn.fd, buf, want, 0);
        if (n > 0) {
            log.received(conn.id, buf, static_cast<std::size_t>(n));
            on_request_bytes(conn, buf, static_cast<std::size_t>(n));
        } else if (n == 0) {
            if (cfg.mutant == kMutantRecvZeroAsData) {
                Byte phantom = 0x00;
                on_request_bytes(conn, &phantom, 1);
            } else {
                drop(conn);
            }
        } else if (errno != EAGAIN && errno != EWOULDBLOCK) {
            drop(conn);
        }
    }

    void run() {
        listener = ::socket(AF_INET, SOCK_STREAM, 0);
        if (listener < 0) throw std::runtime_error("socket() failed");
        int one = 1;
        setsockopt(listener, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_addr.s_addr = htonl(INADDR_ANY);
        addr.sin_port = htons(cfg.port);
        if (bind(listener, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
            throw std::runtime_error("bind() failed: " + std::string(strerror(errno)));
        }
        if (listen(listener, 64) != 0) {
            throw std::runtime_error("listen() failed: " + std::string(strerror(errno)));
        }
        set_nonblocking(listener);
        socklen_t len = sizeof addr;
        getsockname(listener, reinterpret_cast<sockaddr*>(&addr), &len);
        if (cfg.on_listening) cfg.on_listening(ntohs(addr.sin_port));

        while (!(cfg.stop && cfg.stop->load())) {
            std::vector<pollfd> fds;
            std::vector<LiveConn*> owners;
            bool accepting = live_count() < cfg.max_connections;
            if (accepting) fds.push_back(pollfd{listener, POLLIN, 0});
            for (LiveConn& c : conns) {
                if (c.deleted) continue;
                short events = 0;
                if (!c.sending) events |= POLLIN;
                if (!c.response_buf.empty()) events |= POLLOUT;
                fds.push_back(pollfd{c.fd, events, 0});
                owners.push_back(&c);
            }
            int ready = ::poll(fds.data(), fds.size(), cfg.poll_timeout_ms);
            if (ready <= 0) continue;

            std::size_t base = 0;
            if (accepting) {
                if (fds[0].revents & POLLIN) accept_one();  // at most one per iteration
                base = 1;
            }
            for (std::size_t i = 0; i < owners.size(); ++i) {
                LiveConn& c = *owners[i];
                short rev = fds[base + i].revents;
                if (c.deleted) continue;
                if ((rev & (POLLOUT | POLLHUP | POLLERR)) && !c.response_buf.empty()) {
                    flush_response(c);
                }
                if (c.deleted) continue;
                if (!c.sending && (rev & (POLLIN | POLLHUP | POLLERR))) {
                    read_request(c);
                }
            }
            conns.remove_if([](const LiveConn& c) { return c.deleted; });
        }
    }
};

}  // namespace

const std::vector<MutantInfo>& mutant_registry() { return kMutants; }

bool is_known_mutant(int id) {
    for (const MutantInfo& m : kMutants) {
        if (m.id == id) return true;
    }
    return false;
}

void serve(const ServerConfig& config) {
    if (config.mutant != 0 && !is_known_mutant(config.mutant)) {
        throw std::runtime_error("unknown mutant id " + std::to_string(config.mutant));
    }
    if (config.message_size < 1) {
        throw std::runtime_error("message_size must be at least 1");
    }
    ServerLoop loop(config);
    loop.run();
}

}  // namespace swapnet
