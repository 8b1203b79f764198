#pragma once

// PPDN/1: binary denoise protocol spoken with an external process over its
// stdin/stdout. Little-endian throughout.
//
//   request  = "PPDN" | u32 version=1 | u32 channels | u32 height | u32 width
//              | f32 sigma (normalized, sigma255/255) | f32 samples[c*h*w] (planar)
//   response = "PPDR" | u32 status
//              status == 0: u32 version | u32 channels | u32 height | u32 width
//                           | f32 sigma | f32 samples[c*h*w]
//              otherwise:   u32 msg_len | msg_len bytes of UTF-8

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <bit>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "pnpir/errors.hpp"
#include "pnpir/image.hpp"

namespace pnpir::ppdn {

static_assert(std::endian::native == std::endian::little, "PPDN/1 codec assumes a little-endian host");

inline constexpr char kRequestMagic[4] = {'P', 'P', 'D', 'N'};
inline constexpr char kResponseMagic[4] = {'P', 'P', 'D', 'R'};
inline constexpr std::uint32_t kVersion = 1;
inline constexpr std::size_t kHeaderBytes = 4 * 4 + 4; // version, c, h, w, sigma

struct Header {
    std::uint32_t version = kVersion;
    std::uint32_t channels = 0;
    std::uint32_t height = 0;
    std::uint32_t width = 0;
    float sigma = 0.0f;
};

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    std::uint8_t b[4];
    std::memcpy(b, &v, 4);
    out.insert(out.end(), b, b + 4);
}

inline void put_f32(std::vector<std::uint8_t>& out, float v) {
    std::uint8_t b[4];
    std::memcpy(b, &v, 4);
    out.insert(out.end(), b, b + 4);
}

inline std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t at) {
    std::uint32_t v;
    std::memcpy(&v, in.data() + at, 4);
    return v;
}

inline float get_f32(std::span<const std::uint8_t> in, std::size_t at) {
    float v;
    std::memcpy(&v, in.data() + at, 4);
    return v;
}

inline void put_header_and_payload(std::vector<std::uint8_t>& out, const Image& img, float sigma) {
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(img.channels()));
    put_u32(out, static_cast<std::uint32_t>(img.height()));
    put_u32(out, static_cast<std::uint32_t>(img.width()));
    put_f32(out, sigma);
    for (double v : img.data()) put_f32(out, static_cast<float>(v));
}

inline std::vector<std::uint8_t> encode_request(const Image& img, double sigma_normalized) {
    std::vector<std::uint8_t> out(kRequestMagic, kRequestMagic + 4);
    out.reserve(4 + kHeaderBytes + 4 * img.size());
    put_header_and_payload(out, img, static_cast<float>(sigma_normalized));
    return out;
}

inline std::vector<std::uint8_t> encode_ok_response(const Image& img, double sigma_normalized) {
    std::vector<std::uint8_t> out(kResponseMagic, kResponseMagic + 4);
    put_u32(out, 0);
    put_header_and_payload(out, img, static_cast<float>(sigma_normalized));
    return out;
}

inline std::vector<std::uint8_t> encode_error_response(std::uint32_t status, const std::string& msg) {
    std::vector<std::uint8_t> out(kResponseMagic, kResponseMagic + 4);
    put_u32(out, status == 0 ? 1 : status);
    put_u32(out, static_cast<std::uint32_t>(msg.size()));
    out.insert(out.end(), msg.begin(), msg.end());
    return out;
}

inline Header decode_header(std::span<const std::uint8_t> in) {
    Header h;
    h.version = get_u32(in, 0);
    h.channels = get_u32(in, 4);
    h.height = get_u32(in, 8);
    h.width = get_u32(in, 12);
    h.sigma = get_f32(in, 16);
    return h;
}

inline Image decode_payload(const Header& h, std::span<const std::uint8_t> payload) {
    Image img(static_cast<int>(h.channels), static_cast<int>(h.height), static_cast<int>(h.width));
    auto dst = img.data();
    if (payload.size() != 4 * dst.size()) throw DenoiserError("protocol", "payload length mismatch");
    for (std::size_t n = 0; n < dst.size(); ++n) dst[n] = get_f32(payload, 4 * n);
    return img;
}

/// One PPDN/1 child process. Requests are single-flight.
class Process {
public:
    using clock = std::chrono::steady_clock;

    Process(const std::string& command, std::chrono::milliseconds timeout) : timeout_(timeout) {
        ::signal(SIGPIPE, SIG_IGN);
        int to_child[2], from_child[2];
        if (::pipe(to_child) != 0) throw DenoiserError("spawn", std::strerror(errno));
        if (::pipe(from_child) != 0) {
            ::close(to_child[0]);
            ::close(to_child[1]);
            throw DenoiserError("spawn", std::strerror(errno));
        }
        pid_ = ::fork();
        if (pid_ < 0) {
            for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) ::close(fd);
            throw DenoiserError("spawn", std::strerror(errno));
        }
        if (pid_ == 0) {
            ::dup2(to_child[0], STDIN_FILENO);
            ::dup2(from_child[1], STDOUT_FILENO);
            for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) ::close(fd);
            const std::string line = "exec " + command;
            ::execl("/bin/sh", "sh", "-c", line.c_str(), static_cast<char*>(nullptr));
            ::_exit(127);
        }
        ::close(to_child[0]);
        ::close(from_child[1]);
        in_fd_ = to_child[1];
        out_fd_ = from_child[0];
        ::fcntl(in_fd_, F_SETFD, FD_CLOEXEC);
        ::fcntl(out_fd_, F_SETFD, FD_CLOEXEC);
    }

    Process(const Process&) = delete;
    Process& operator=(const Process&) = delete;

    ~Process() { shutdown(); }

    /// Closes the child's stdin and reaps it, killing it if it lingers.
    void shutdown() noexcept {
        if (in_fd_ >= 0) ::close(in_fd_);
        in_fd_ = -1;
        if (pid_ > 0) {
            int status = 0;
            const auto deadline = clock::now() + std::chrono::seconds(2);
            while (::waitpid(pid_, &status, WNOHANG) == 0) {
                if (clock::now() > deadline) {
                    ::kill(pid_, SIGKILL);
                    ::waitpid(pid_, &status, 0);
                    break;
                }
                ::usleep(1000);
            }
            pid_ = -1;
        }
        if (out_fd_ >= 0) ::close(out_fd_);
        out_fd_ = -1;
    }

    Image denoise(const Image& img, double sigma_normalized) {
        if (pid_ <= 0) throw DenoiserError("spawn", "process is not running");
        const auto deadline = clock::now() + timeout_;
        const auto request = encode_request(img, sigma_normalized);
        write_all(request, deadline);

        std::uint8_t head[8];
        read_exact(head, sizeof(head), deadline, "read-response");
        if (std::memcmp(head, kResponseMagic, 4) != 0) fail("protocol", "bad response magic");
        const std::uint32_t status = get_u32(head, 4);
        if (status != 0) {
            std::uint8_t len_bytes[4];
            read_exact(len_bytes, 4, deadline, "read-response");
            const std::uint32_t len = get_u32(len_bytes, 0);
            if (len > (1u << 20)) fail("protocol", "error message too long");
            std::string msg(len, '\0');
            read_exact(reinterpret_cast<std::uint8_t*>(msg.data()), len, deadline, "read-response");
            throw DenoiserError("remote", "status " + std::to_string(status) + ": " + msg);
        }
        std::uint8_t hdr[kHeaderBytes];
        read_exact(hdr, kHeaderBytes, deadline, "read-response");
        const Header h = decode_header(hdr);
        if (h.version != kVersion) fail("protocol", "unsupported version " + std::to_string(h.version));
        if (static_cast<int>(h.channels) != img.channels() || static_cast<int>(h.height) != img.height() ||
            static_cast<int>(h.width) != img.width())
            fail("protocol", "response shape differs from request");
        std::vector<std::uint8_t> payload(4 * img.size());
        read_exact(payload.data(), payload.size(), deadline, "read-response");
        Image out = decode_payload(h, payload);
        if (!out.all_finite()) fail("protocol", "non-finite samples in response");
        return out;
    }

private:
    [[noreturn]] void fail(const std::string& phase, const std::string& what) {
        // the stream is out of sync; the process cannot be reused
        if (pid_ > 0) ::kill(pid_, SIGKILL);
        shutdown();
        throw DenoiserError(phase, what);
    }

    int remaining_ms(clock::time_point deadline) const {
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - clock::now()).count();
        return left > 0 ? static_cast<int>(left) : 0;
    }

    void write_all(std::span<const std::uint8_t> bytes, clock::time_point deadline) {
        std::size_t done = 0;
        while (done < bytes.size()) {
            pollfd pfd{in_fd_, POLLOUT, 0};
            const int r = ::poll(&pfd, 1, remaining_ms(deadline));
            if (r == 0) fail("timeout", "writing request");
            if (r < 0) {
                if (errno == EINTR) continue;
                fail("write-request", std::strerror(errno));
            }
            const ssize_t n = ::write(in_fd_, bytes.data() + done, bytes.size() - done);
            if (n < 0) {
                if (errno == EINTR || errno == EAGAIN) continue;
                fail("write-request", std::strerror(errno));
            }
            done += static_cast<std::size_t>(n);
        }
    }

    void read_exact(std::uint8_t* dst, std::size_t len, clock::time_point deadline, const char* phase) {
        std::size_t done = 0;
        while (done < len) {
            pollfd pfd{out_fd_, POLLIN, 0};
            const int r = ::poll(&pfd, 1, remaining_ms(deadline));
            if (r == 0) fail("timeout", std::string("waiting in ") + phase);
            if (r < 0) {
                if (errno == EINTR) continue;
                fail(phase, std::strerror(errno));
            }
            const ssize_t n = ::read(out_fd_, dst + done, len - done);
            if (n == 0) fail(phase, "process closed its output");
            if (n < 0) {
                if (errno == EINTR || errno == EAGAIN) continue;
                fail(phase, std::strerror(errno));
            }
            done += static_cast<std::size_t>(n);
        }
    }

    std::chrono::milliseconds timeout_;
    pid_t pid_ = -1;
    int in_fd_ = -1;
    int out_fd_ = -1;
};

} // namespace pnpir::ppdn
