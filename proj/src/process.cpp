#include "mergesynth/process.hpp"

#include "mergesynth/errors.hpp"

#include <cerrno>
#include <csignal>
#include <cstring>

extern "C" {
#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>
}

namespace mergesynth {

namespace {

    struct Fd {
        int fd = -1;
        Fd() = default;
        explicit Fd(int f) : fd(f) {}
        Fd(const Fd&) = delete;
        Fd& operator=(const Fd&) = delete;
        ~Fd() { reset(); }
        void reset() {
            if (fd >= 0) ::close(fd);
            fd = -1;
        }
    };

    void make_pipe(Fd& r, Fd& w) {
        int fds[2];
        if (::pipe2(fds, O_CLOEXEC) != 0) throw Error(std::string("pipe: ") + std::strerror(errno));
        r.fd = fds[0];
        w.fd = fds[1];
    }

}  // namespace

ProcessResult run_process(const std::vector<std::string>& argv, std::string_view input) {
    if (argv.empty()) throw Error("run_process: empty argv");

    Fd in_r, in_w, out_r, out_w;
    make_pipe(in_r, in_w);
    make_pipe(out_r, out_w);

    std::vector<char*> args;
    for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);

    pid_t pid = ::fork();
    if (pid < 0) throw Error(std::string("fork: ") + std::strerror(errno));
    if (pid == 0) {
        ::dup2(in_r.fd, STDIN_FILENO);
        ::dup2(out_w.fd, STDOUT_FILENO);
        int devnull = ::open("/dev/null", O_WRONLY);
        if (devnull >= 0) ::dup2(devnull, STDERR_FILENO);
        ::execvp(args[0], args.data());
        ::_exit(127);
    }
    in_r.reset();
    out_w.reset();

    // a child that exits early must not kill us through SIGPIPE
    struct sigaction ignore{}, previous{};
    ignore.sa_handler = SIG_IGN;
    ::sigaction(SIGPIPE, &ignore, &previous);

    ProcessResult result;
    std::size_t written = 0;
    if (input.empty()) in_w.reset();
    char buf[65536];
    while (out_r.fd >= 0) {
        pollfd fds[2];
        nfds_t count = 0;
        fds[count++] = {out_r.fd, POLLIN, 0};
        if (in_w.fd >= 0) fds[count++] = {in_w.fd, POLLOUT, 0};
        if (::poll(fds, count, -1) < 0) {
            if (errno == EINTR) continue;
            break;
        }
        if (count == 2 && (fds[1].revents & (POLLOUT | POLLERR | POLLHUP))) {
            ssize_t w = ::write(in_w.fd, input.data() + written, input.size() - written);
            if (w > 0) written += static_cast<std::size_t>(w);
            if (w < 0 || written == input.size()) in_w.reset();
        }
        if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
            ssize_t r = ::read(out_r.fd, buf, sizeof buf);
            if (r > 0) {
                result.out.append(buf, static_cast<std::size_t>(r));
            } else if (r == 0 || errno != EINTR) {
                out_r.reset();
            }
        }
    }
    in_w.reset();
    ::sigaction(SIGPIPE, &previous, nullptr);

    int status = 0;
    while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
    }
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
    return result;
}

}  // namespace mergesynth
