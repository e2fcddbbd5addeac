#include "lrsens/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

#include "lrsens/error.hpp"

namespace lrsens::kernels {

namespace scalar {

double sum(std::span<const double> x) {
  double acc = 0.0;
  for (double v : x) acc += v;
  return acc;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double centered_dot(std::span<const double> a, double ca,
                    std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - ca) * b[i];
  return acc;
}

double centered_cross(std::span<const double> a, double ca,
                      std::span<const double> b, double cb) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    acc += (a[i] - ca) * (b[i] - cb);
  return acc;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

}  // namespace scalar

#ifndef LRSENS_HAVE_AVX2_TU
// Non-x86 builds: the AVX2 entry points exist but are never selected.
namespace avx2 {
double sum(std::span<const double> x) { return scalar::sum(x); }
double dot(std::span<const double> a, std::span<const double> b) {
  return scalar::dot(a, b);
}
double centered_dot(std::span<const double> a, double ca,
                    std::span<const double> b) {
  return scalar::centered_dot(a, ca, b);
}
double centered_cross(std::span<const double> a, double ca,
                      std::span<const double> b, double cb) {
  return scalar::centered_cross(a, ca, b, cb);
}
void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  scalar::axpy(alpha, x, y);
}
}  // namespace avx2
#endif

namespace {

bool cpu_has_avx2() {
#if defined(LRSENS_HAVE_AVX2_TU) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa detect() {
  if (const char* env = std::getenv("LRSENS_ISA")) {
    const std::string v(env);
    if (v == "scalar") return Isa::kScalar;
    if (v == "avx2" && cpu_has_avx2()) return Isa::kAvx2;
  }
  return cpu_has_avx2() ? Isa::kAvx2 : Isa::kScalar;
}

// -1: not yet resolved.
std::atomic<int> g_isa{-1};

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
  }
  return "unknown";
}

bool isa_available(Isa isa) {
  return isa == Isa::kScalar || (isa == Isa::kAvx2 && cpu_has_avx2());
}

Isa active_isa() {
  int v = g_isa.load(std::memory_order_acquire);
  if (v < 0) {
    v = static_cast<int>(detect());
    g_isa.store(v, std::memory_order_release);
  }
  return static_cast<Isa>(v);
}

void set_isa(std::optional<Isa> isa) {
  if (!isa) {
    g_isa.store(static_cast<int>(detect()), std::memory_order_release);
    return;
  }
  if (!isa_available(*isa))
    throw ArgumentError("kernel variant '" + std::string(isa_name(*isa)) +
                        "' is not available on this CPU");
  g_isa.store(static_cast<int>(*isa), std::memory_order_release);
}

double sum(std::span<const double> x) {
  return active_isa() == Isa::kAvx2 ? avx2::sum(x) : scalar::sum(x);
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ArgumentError("dot: length mismatch");
  return active_isa() == Isa::kAvx2 ? avx2::dot(a, b) : scalar::dot(a, b);
}

double centered_dot(std::span<const double> a, double ca,
                    std::span<const double> b) {
  if (a.size() != b.size())
    throw ArgumentError("centered_dot: length mismatch");
  return active_isa() == Isa::kAvx2 ? avx2::centered_dot(a, ca, b)
                                    : scalar::centered_dot(a, ca, b);
}

double centered_cross(std::span<const double> a, double ca,
                      std::span<const double> b, double cb) {
  if (a.size() != b.size())
    throw ArgumentError("centered_cross: length mismatch");
  return active_isa() == Isa::kAvx2 ? avx2::centered_cross(a, ca, b, cb)
                                    : scalar::centered_cross(a, ca, b, cb);
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) throw ArgumentError("axpy: length mismatch");
  if (active_isa() == Isa::kAvx2)
    avx2::axpy(alpha, x, y);
  else
    scalar::axpy(alpha, x, y);
}

}  // namespace lrsens::kernels
