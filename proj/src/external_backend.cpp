#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstring>
#include <stdexcept>
#include <vector>

#include "hpn/backends.hpp"

namespace hpn {

namespace {

void write_all(int fd, const void* data, std::size_t n) {
  const char* p = static_cast<const char*>(data);
  while (n > 0) {
    ssize_t w = ::write(fd, p, n);
    if (w < 0) {
      if (errno == EINTR) continue;
      throw BackendError("external backend: write to peer failed");
    }
    p += w;
    n -= static_cast<std::size_t>(w);
  }
}

void read_all(int fd, void* data, std::size_t n, double timeout_seconds) {
  char* p = static_cast<char*>(data);
  auto deadline = std::chrono::steady_clock::now() +
                  std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                      std::chrono::duration<double>(timeout_seconds));
  while (n > 0) {
    auto remain = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (remain.count() <= 0) throw BackendError("external backend: peer response timed out");
    pollfd pfd{fd, POLLIN, 0};
    int rc = ::poll(&pfd, 1, static_cast<int>(remain.count()));
    if (rc < 0) {
      if (errno == EINTR) continue;
      throw BackendError("external backend: poll failed");
    }
    if (rc == 0) throw BackendError("external backend: peer response timed out");
    ssize_t r = ::read(fd, p, n);
    if (r < 0) {
      if (errno == EINTR) continue;
      throw BackendError("external backend: read from peer failed");
    }
    if (r == 0) throw BackendError("external backend: peer closed the pipe (short read)");
    p += r;
    n -= static_cast<std::size_t>(r);
  }
}

}  // namespace

ExternalBackend::ExternalBackend(const std::string& command, BackendOutputKind kind,
                                 double timeout_seconds)
    : command_(command), kind_(kind), timeout_seconds_(timeout_seconds) {
  spawn();
}

ExternalBackend::~ExternalBackend() { shutdown(); }

void ExternalBackend::spawn() {
  int to_child[2];
  int from_child[2];
  if (::pipe(to_child) != 0 || ::pipe(from_child) != 0)
    throw BackendError("external backend: pipe() failed");
  pid_t pid = ::fork();
  if (pid < 0) throw BackendError("external backend: fork() failed");
  if (pid == 0) {
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::close(to_child[0]);
    ::close(to_child[1]);
    ::close(from_child[0]);
    ::close(from_child[1]);
    ::execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  ::close(to_child[0]);
  ::close(from_child[1]);
  child_pid_ = pid;
  to_child_ = to_child[1];
  from_child_ = from_child[0];
}

void ExternalBackend::shutdown() {
  if (to_child_ >= 0) ::close(to_child_);
  if (from_child_ >= 0) ::close(from_child_);
  to_child_ = from_child_ = -1;
  if (child_pid_ > 0) {
    int status = 0;
    // give the peer a moment to exit on EOF, then force it
    for (int i = 0; i < 50; ++i) {
      pid_t r = ::waitpid(child_pid_, &status, WNOHANG);
      if (r == child_pid_ || r < 0) {
        child_pid_ = -1;
        return;
      }
      ::usleep(10000);
    }
    ::kill(child_pid_, SIGKILL);
    ::waitpid(child_pid_, &status, 0);
    child_pid_ = -1;
  }
}

std::vector<double> ExternalBackend::eval(const Patch& patch,
                                          std::span<const Vec3> local_points) const {
  std::lock_guard<std::mutex> lock(io_mutex_);
  if (child_pid_ <= 0) throw BackendError("external backend: peer process is not running");

  const std::uint32_t n = static_cast<std::uint32_t>(patch.n);
  const std::uint32_t k = static_cast<std::uint32_t>(local_points.size());
  std::vector<char> request;
  request.reserve(16 + patch.pixels.size() * 5 + local_points.size() * 12);
  auto append = [&request](const void* data, std::size_t len) {
    const char* p = static_cast<const char*>(data);
    request.insert(request.end(), p, p + len);
  };
  append("HPNB", 4);
  std::uint32_t version = kHpnbVersion;
  append(&version, 4);
  append(&n, 4);
  append(patch.pixels.data(), patch.pixels.size() * 4);
  append(patch.valid.data(), patch.valid.size());
  append(&k, 4);
  std::vector<float> coords(3 * local_points.size());
  for (std::size_t i = 0; i < local_points.size(); ++i) {
    coords[3 * i + 0] = static_cast<float>(local_points[i].x);
    coords[3 * i + 1] = static_cast<float>(local_points[i].y);
    coords[3 * i + 2] = static_cast<float>(local_points[i].z);
  }
  append(coords.data(), coords.size() * 4);
  write_all(to_child_, request.data(), request.size());

  char magic[4];
  read_all(from_child_, magic, 4, timeout_seconds_);
  if (std::memcmp(magic, "HPNR", 4) != 0)
    throw BackendError("external backend: bad response magic from peer");
  std::uint32_t rk = 0;
  read_all(from_child_, &rk, 4, timeout_seconds_);
  if (rk != k)
    throw BackendError("external backend: peer returned " + std::to_string(rk) +
                       " values for " + std::to_string(k) + " points");
  std::vector<float> values(k);
  if (k > 0) read_all(from_child_, values.data(), 4 * static_cast<std::size_t>(k), timeout_seconds_);
  return std::vector<double>(values.begin(), values.end());
}

}  // namespace hpn
