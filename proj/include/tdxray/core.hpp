#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace tdxray {

using Complex = std::complex<double>;

template <int Dim>
using Vec = Eigen::Matrix<double, Dim, 1>;

template <int Dim>
using Mat = Eigen::Matrix<double, Dim, Dim>;

template <int Dim>
using CVec = Eigen::Matrix<Complex, Dim, 1>;

template <int Dim>
using CMat = Eigen::Matrix<Complex, Dim, Dim>;

inline constexpr double kPi = std::numbers::pi;

/// Failure categories surfaced by the toolkit. The CLI prints the name as the
/// machine-readable error record.
enum class ErrorKind {
    TangentRay,
    NoExit,
    QuadratureNotConverged,
    AliasingSuspected,
    CoverageError,
    NotVisible,
    ZeroXi,
    InfeasibleSandwich,
    RTooLargeForGrid,
    CausticDetected,
    Inadmissible,
    StencilUnderResolved,
    CFLViolation,
    Unstable,
    ConfigInvalid,
    InvalidArgument,
};

inline const char* to_string(ErrorKind k) {
    switch (k) {
        case ErrorKind::TangentRay: return "TangentRay";
        case ErrorKind::NoExit: return "NoExit";
        case ErrorKind::QuadratureNotConverged: return "QuadratureNotConverged";
        case ErrorKind::AliasingSuspected: return "AliasingSuspected";
        case ErrorKind::CoverageError: return "CoverageError";
        case ErrorKind::NotVisible: return "NotVisible";
        case ErrorKind::ZeroXi: return "ZeroXi";
        case ErrorKind::InfeasibleSandwich: return "InfeasibleSandwich";
        case ErrorKind::RTooLargeForGrid: return "RTooLargeForGrid";
        case ErrorKind::CausticDetected: return "CausticDetected";
        case ErrorKind::Inadmissible: return "Inadmissible";
        case ErrorKind::StencilUnderResolved: return "StencilUnderResolved";
        case ErrorKind::CFLViolation: return "CFLViolation";
        case ErrorKind::Unstable: return "Unstable";
        case ErrorKind::ConfigInvalid: return "ConfigInvalid";
        case ErrorKind::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string where, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + " in " + where + ": " + what),
          kind_(kind), where_(std::move(where)), message_(what) {}

    ErrorKind kind() const noexcept { return kind_; }
    /// "module/op" of the failing operation.
    const std::string& where() const noexcept { return where_; }
    /// Message without the kind and location prefix.
    const std::string& message() const noexcept { return message_; }

private:
    ErrorKind kind_;
    std::string where_;
    std::string message_;
};

namespace detail {
inline std::atomic<unsigned>& thread_override() {
    static std::atomic<unsigned> v{0};
    return v;
}
inline bool& in_parallel_region() {
    thread_local bool flag = false;
    return flag;
}
}  // namespace detail

/// Programmatic cap on worker threads (0 clears it); takes precedence over TDXRAY_THREADS.
inline void set_thread_cap(unsigned n) { detail::thread_override() = n; }

/// Worker count: set_thread_cap, else TDXRAY_THREADS, else the hardware concurrency.
inline unsigned thread_count() {
    if (unsigned o = detail::thread_override().load()) return o;
    if (const char* env = std::getenv("TDXRAY_THREADS")) {
        int v = std::atoi(env);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(i) for i in [0, n). Each index is handled by exactly one worker and
/// results must be written to per-index slots, so output never depends on the
/// thread count. The first exception thrown (lowest index) is rethrown. Calls
/// made from inside a worker run serially.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
    const unsigned workers = detail::in_parallel_region() ? 1u : static_cast<unsigned>(std::min<std::size_t>(thread_count(), n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::exception_ptr> errors(n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            detail::in_parallel_region() = true;
            for (std::size_t i = w; i < n; i += workers) {
                try {
                    body(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

/// Counter-based uniform variate in [-1, 1]; used for reproducible noise that is
/// independent of evaluation order.
inline double hashed_uniform(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                             std::uint64_t c = 0) {
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    std::uint64_t h = mix(seed);
    h = mix(h ^ a);
    h = mix(h ^ b);
    h = mix(h ^ c);
    return static_cast<double>(h >> 11) * 0x1.0p-53 * 2.0 - 1.0;
}

}  // namespace tdxray
