#include "sajd/detection_service.hpp"
#include "sajd/net_util.hpp"
#include "sajd/store.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstring>
#include <thread>

// httplib drags in <resolv.h>, whose _res macro mangles any Eigen header
// parsed after it; keep it last.
#include "httplib.h"
#include "json.hpp"

namespace sajd {

int connectTcp(const std::string& host, int port) {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw IoError("socket() failed");
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<uint16_t>(port));
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd);
    throw IoError("bad address: " + host);
  }
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(fd);
    throw IoError("connect to " + host + ":" + std::to_string(port) + " failed: " +
                  std::strerror(errno));
  }
  return fd;
}

void sendAll(int fd, const std::string& data) {
  size_t sent = 0;
  while (sent < data.size()) {
    ssize_t n = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n <= 0) throw IoError(std::string("send failed: ") + std::strerror(errno));
    sent += static_cast<size_t>(n);
  }
}

void closeFd(int fd) {
  if (fd >= 0) ::close(fd);
}

struct ServiceRunner::Impl {
  ServeConfig cfg;
  std::unique_ptr<ModelRegistry> registry;
  std::unique_ptr<Store> store;
  std::unique_ptr<DetectionService> service;
  httplib::Server control;
  std::thread control_thread;
  std::thread stream_thread;
  std::atomic<bool> stop_flag{false};
  int listen_fd = -1;

  void streamLoop() {
    while (!stop_flag.load()) {
      pollfd pfd{listen_fd, POLLIN, 0};
      int r = ::poll(&pfd, 1, 100);
      if (r <= 0) continue;
      int conn = ::accept(listen_fd, nullptr, nullptr);
      if (conn < 0) continue;
      serveConnection(conn);
      ::close(conn);
      // Next connection starts from an empty window; counters persist.
      service->resetWindow();
    }
  }

  void serveConnection(int conn) {
    std::string buffer;
    char chunk[4096];
    while (!stop_flag.load()) {
      pollfd pfd{conn, POLLIN, 0};
      int r = ::poll(&pfd, 1, 100);
      if (r < 0) return;
      if (r == 0) continue;
      ssize_t n = ::recv(conn, chunk, sizeof(chunk), 0);
      if (n <= 0) return;
      buffer.append(chunk, static_cast<size_t>(n));
      size_t pos;
      while ((pos = buffer.find('\n')) != std::string::npos) {
        std::string line = buffer.substr(0, pos);
        buffer.erase(0, pos + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) service->ingestLine(line);
      }
    }
  }
};

ServiceRunner::ServiceRunner(ServeConfig cfg) : impl_(std::make_unique<Impl>()) {
  impl_->cfg = std::move(cfg);
}

ServiceRunner::~ServiceRunner() {
  try {
    stop();
  } catch (...) {
  }
}

void ServiceRunner::start() {
  Impl& im = *impl_;
  im.registry = std::make_unique<ModelRegistry>(im.cfg.registry_dir);
  im.store = std::make_unique<Store>(im.cfg.store_dir);
  im.service = std::make_unique<DetectionService>(im.registry.get(), im.cfg.service);
  im.service->setPredictionSink(
      [&im](const Prediction& p) { im.store->appendPrediction(p); });
  im.service->deployLatest();

  im.listen_fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (im.listen_fd < 0) throw BindError("socket() failed");
  int one = 1;
  ::setsockopt(im.listen_fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<uint16_t>(im.cfg.stream_port));
  if (::inet_pton(AF_INET, im.cfg.host.c_str(), &addr.sin_addr) != 1)
    throw BindError("bad host: " + im.cfg.host);
  if (::bind(im.listen_fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0)
    throw BindError("cannot bind stream port " + std::to_string(im.cfg.stream_port) + ": " +
                    std::strerror(errno));
  if (::listen(im.listen_fd, 4) != 0) throw BindError("listen() failed");

  im.control.Post("/a1/model-update", [&im](const httplib::Request& req,
                                            httplib::Response& res) {
    nlohmann::json out;
    auto body = nlohmann::json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object() || !body.contains("model_version") ||
        !body["model_version"].is_number_integer()) {
      out["ack"] = false;
      out["error"] = "body must carry an integer model_version";
      res.status = 400;
      res.set_content(out.dump(), "application/json");
      return;
    }
    int version = body["model_version"].get<int>();
    std::string uri = body.value("registry_uri", "");
    UpdateAck ack = im.service->handleModelUpdate(version, uri);
    out["ack"] = ack.ok;
    if (ack.ok) {
      out["old"] = ack.old_version;
      out["new"] = ack.new_version;
    } else {
      out["error"] = ack.error;
    }
    res.set_content(out.dump(), "application/json");
  });

  im.control.Get("/a1/status", [&im](const httplib::Request&, httplib::Response& res) {
    ServiceStatus st = im.service->status();
    nlohmann::json out;
    out["model_version"] = st.model_version;
    out["received"] = st.received;
    out["inferred"] = st.inferred;
    out["dropped"] = st.dropped;
    out["decode_errors"] = st.decode_errors;
    out["gaps"] = st.gaps;
    res.set_content(out.dump(), "application/json");
  });

  if (!im.control.bind_to_port(im.cfg.host, im.cfg.control_port))
    throw BindError("cannot bind control port " + std::to_string(im.cfg.control_port));

  im.control_thread = std::thread([&im]() { im.control.listen_after_bind(); });
  im.stream_thread = std::thread([&im]() { im.streamLoop(); });
}

void ServiceRunner::stop() {
  Impl& im = *impl_;
  if (im.stop_flag.exchange(true)) {
    wait();
    return;
  }
  im.control.stop();
  wait();
  if (im.listen_fd >= 0) {
    ::close(im.listen_fd);
    im.listen_fd = -1;
  }
  if (im.store) im.store->sync();
}

void ServiceRunner::wait() {
  Impl& im = *impl_;
  if (im.control_thread.joinable()) im.control_thread.join();
  if (im.stream_thread.joinable()) im.stream_thread.join();
}

ServiceStatus ServiceRunner::status() const {
  return impl_->service ? impl_->service->status() : ServiceStatus{};
}

}  // namespace sajd
