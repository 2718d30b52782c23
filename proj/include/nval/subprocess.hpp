#pragma once

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstring>
#include <string>
#include <vector>

#include "nval/errors.hpp"

namespace nval {

struct SubprocessResult {
  int exit_code = -1;
  std::string out;
  std::string err;
  bool timed_out = false;
};

// Runs argv with stdin_data piped in; collects stdout/stderr until exit.
// On timeout the child is killed with SIGKILL and timed_out is set.
inline SubprocessResult run_subprocess(const std::vector<std::string>& argv,
                                       const std::string& stdin_data = {},
                                       int timeout_ms = 600'000) {
  if (argv.empty()) throw ProtocolError("empty argv");

  int in_pipe[2], out_pipe[2], err_pipe[2];
  if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0 || pipe(err_pipe) != 0)
    throw IoError("pipe() failed");

  pid_t pid = fork();
  if (pid < 0) throw IoError("fork() failed");
  if (pid == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    dup2(err_pipe[1], STDERR_FILENO);
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1], err_pipe[0],
                   err_pipe[1]})
      close(fd);
    std::vector<char*> cargv;
    for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
    cargv.push_back(nullptr);
    execvp(cargv[0], cargv.data());
    perror("execvp");
    _exit(127);
  }

  close(in_pipe[0]);
  close(out_pipe[1]);
  close(err_pipe[1]);
  fcntl(in_pipe[1], F_SETFL, O_NONBLOCK);

  // The writing end must not raise SIGPIPE if the child exits early.
  struct sigaction ignore {}, saved {};
  ignore.sa_handler = SIG_IGN;
  sigaction(SIGPIPE, &ignore, &saved);

  SubprocessResult result;
  size_t written = 0;
  bool stdin_open = !stdin_data.empty();
  if (!stdin_open) close(in_pipe[1]);
  bool out_open = true, err_open = true;

  auto deadline =
      std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
  char buf[4096];

  while (out_open || err_open || stdin_open) {
    auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
                         deadline - std::chrono::steady_clock::now())
                         .count();
    if (remaining <= 0) {
      kill(pid, SIGKILL);
      result.timed_out = true;
      break;
    }
    std::vector<pollfd> fds;
    if (out_open) fds.push_back({out_pipe[0], POLLIN, 0});
    if (err_open) fds.push_back({err_pipe[0], POLLIN, 0});
    if (stdin_open) fds.push_back({in_pipe[1], POLLOUT, 0});
    int rc = poll(fds.data(), fds.size(), static_cast<int>(remaining));
    if (rc < 0) {
      if (errno == EINTR) continue;
      break;
    }
    for (const auto& p : fds) {
      if (p.revents == 0) continue;
      if (p.fd == out_pipe[0] || p.fd == err_pipe[0]) {
        ssize_t n = read(p.fd, buf, sizeof buf);
        if (n > 0) {
          (p.fd == out_pipe[0] ? result.out : result.err).append(buf, n);
        } else {
          close(p.fd);
          (p.fd == out_pipe[0] ? out_open : err_open) = false;
        }
      } else if (p.fd == in_pipe[1]) {
        if (p.revents & (POLLERR | POLLHUP)) {
          close(in_pipe[1]);
          stdin_open = false;
          continue;
        }
        ssize_t n = write(in_pipe[1], stdin_data.data() + written,
                          stdin_data.size() - written);
        if (n > 0) written += n;
        if (n < 0 && errno != EAGAIN && errno != EINTR) {
          close(in_pipe[1]);
          stdin_open = false;
        }
        if (written == stdin_data.size()) {
          close(in_pipe[1]);
          stdin_open = false;
        }
      }
    }
  }
  if (out_open) close(out_pipe[0]);
  if (err_open) close(err_pipe[0]);
  if (stdin_open) close(in_pipe[1]);

  int status = 0;
  waitpid(pid, &status, 0);
  sigaction(SIGPIPE, &saved, nullptr);
  if (WIFEXITED(status))
    result.exit_code = WEXITSTATUS(status);
  else if (WIFSIGNALED(status))
    result.exit_code = 128 + WTERMSIG(status);
  return result;
}

}  // namespace nval
