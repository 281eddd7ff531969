#include "dvp/subprocess.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/socket.h>
#include <sys/stat.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <sstream>

#include "dvp/error.hpp"

extern char** environ;

namespace dvp {

namespace {

class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  Fd(Fd&& o) noexcept : fd_(o.release()) {}
  Fd& operator=(Fd&& o) noexcept {
    reset(o.release());
    return *this;
  }
  ~Fd() { reset(); }

  int get() const { return fd_; }
  int release() {
    const int f = fd_;
    fd_ = -1;
    return f;
  }
  void reset(int f = -1) {
    if (fd_ >= 0) ::close(fd_);
    fd_ = f;
  }
  explicit operator bool() const { return fd_ >= 0; }

 private:
  int fd_ = -1;
};

void set_nonblocking(int fd) { ::fcntl(fd, F_SETFL, ::fcntl(fd, F_GETFL) | O_NONBLOCK); }

std::pair<Fd, Fd> make_pipe() {
  int p[2];
  if (::pipe2(p, O_CLOEXEC) != 0) throw CodecError(std::string("pipe: ") + std::strerror(errno));
  return {Fd(p[0]), Fd(p[1])};
}

}  // namespace

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "'\\''";
    else out += c;
  }
  return out + "'";
}

ProcessResult run_shell(const std::string& command, std::span<const std::uint8_t> stdin_data, bool capture_stdout,
                        std::chrono::seconds timeout) {
  // stdin travels over a socket so writes to an exited child fail with
  // EPIPE (MSG_NOSIGNAL) instead of raising SIGPIPE in this process.
  int sv[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, sv) != 0) {
    throw CodecError(std::string("socketpair: ") + std::strerror(errno));
  }
  Fd in_parent(sv[0]), in_child(sv[1]);
  auto [out_read, out_write] = make_pipe();
  auto [err_read, err_write] = make_pipe();
  Fd devnull;
  if (!capture_stdout) devnull.reset(::open("/dev/null", O_WRONLY | O_CLOEXEC));

  posix_spawn_file_actions_t fa;
  posix_spawn_file_actions_init(&fa);
  posix_spawn_file_actions_adddup2(&fa, in_child.get(), STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&fa, capture_stdout ? out_write.get() : devnull.get(), STDOUT_FILENO);
  posix_spawn_file_actions_adddup2(&fa, err_write.get(), STDERR_FILENO);

  const char* argv[] = {"/bin/sh", "-c", command.c_str(), nullptr};
  pid_t pid = 0;
  const int rc = ::posix_spawn(&pid, "/bin/sh", &fa, nullptr, const_cast<char* const*>(argv), environ);
  posix_spawn_file_actions_destroy(&fa);
  if (rc != 0) throw CodecError(std::string("posix_spawn: ") + std::strerror(rc));

  in_child.reset();
  out_write.reset();
  err_write.reset();
  ::shutdown(in_parent.get(), SHUT_RD);
  set_nonblocking(in_parent.get());
  set_nonblocking(out_read.get());
  set_nonblocking(err_read.get());
  if (stdin_data.empty()) in_parent.reset();
  if (!capture_stdout) out_read.reset();

  ProcessResult result;
  std::size_t written = 0;
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  char buf[1 << 16];

  while (in_parent || out_read || err_read) {
    pollfd fds[3];
    int n = 0;
    int in_idx = -1, out_idx = -1, err_idx = -1;
    if (in_parent) {
      in_idx = n;
      fds[n++] = {in_parent.get(), POLLOUT, 0};
    }
    if (out_read) {
      out_idx = n;
      fds[n++] = {out_read.get(), POLLIN, 0};
    }
    if (err_read) {
      err_idx = n;
      fds[n++] = {err_read.get(), POLLIN, 0};
    }
    int wait_ms = -1;
    if (timeout.count() > 0) {
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) {
        result.timed_out = true;
        break;
      }
      wait_ms = static_cast<int>(std::min<long long>(left.count(), 1000));
    }
    const int pr = ::poll(fds, n, wait_ms);
    if (pr < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (in_idx >= 0 && fds[in_idx].revents) {
      const ssize_t w = ::send(in_parent.get(), stdin_data.data() + written, stdin_data.size() - written,
                               MSG_NOSIGNAL);
      if (w > 0) written += static_cast<std::size_t>(w);
      if ((w < 0 && errno != EAGAIN && errno != EINTR) || written == stdin_data.size()) in_parent.reset();
    }
    if (out_idx >= 0 && fds[out_idx].revents) {
      const ssize_t r = ::read(out_read.get(), buf, sizeof buf);
      if (r > 0) result.stdout_data.insert(result.stdout_data.end(), buf, buf + r);
      else if (r == 0 || (errno != EAGAIN && errno != EINTR)) out_read.reset();
    }
    if (err_idx >= 0 && fds[err_idx].revents) {
      const ssize_t r = ::read(err_read.get(), buf, sizeof buf);
      if (r > 0) result.stderr_text.append(buf, buf + r);
      else if (r == 0 || (errno != EAGAIN && errno != EINTR)) err_read.reset();
    }
  }

  if (result.timed_out) ::kill(pid, SIGKILL);
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  if (WIFEXITED(status)) result.exit_code = WEXITSTATUS(status);
  else if (WIFSIGNALED(status)) result.exit_code = 128 + WTERMSIG(status);
  return result;
}

bool program_available(const std::string& command) {
  std::istringstream ss(command);
  std::string prog;
  ss >> prog;
  if (prog.empty()) return false;
  auto executable = [](const std::string& p) {
    struct stat st {};
    return ::stat(p.c_str(), &st) == 0 && S_ISREG(st.st_mode) && ::access(p.c_str(), X_OK) == 0;
  };
  if (prog.find('/') != std::string::npos) return executable(prog);
  const char* path = std::getenv("PATH");
  if (!path) return false;
  std::istringstream ps(path);
  std::string dir;
  while (std::getline(ps, dir, ':')) {
    if (!dir.empty() && executable(dir + "/" + prog)) return true;
  }
  return false;
}

std::chrono::seconds codec_timeout_from_env() {
  const char* v = std::getenv("DVP_CODEC_TIMEOUT_SECS");
  if (!v) return std::chrono::seconds{0};
  char* end = nullptr;
  const long s = std::strtol(v, &end, 10);
  if (end == v || *end != '\0' || s < 0) return std::chrono::seconds{0};
  return std::chrono::seconds{s};
}

}  // namespace dvp
