#pragma once

// Reduction kernels behind every ensemble statistic. Each kernel has a scalar
// reference implementation and, on x86-64, an AVX2 variant selected at run
// time. Results of the two agree to rounding; within one process the chosen
// variant is fixed, so repeated runs are bit-identical.

#include <optional>
#include <span>
#include <string_view>

namespace lrsens::kernels {

enum class Isa { kScalar, kAvx2 };

std::string_view isa_name(Isa isa);
bool isa_available(Isa isa);

/// Variant in use. Defaults to the best available one; the environment
/// variable LRSENS_ISA=scalar|avx2 or set_isa() overrides it.
Isa active_isa();
/// Passing std::nullopt restores automatic selection. Throws ArgumentError
/// if the variant is not available on this CPU.
void set_isa(std::optional<Isa> isa);

double sum(std::span<const double> x);
double dot(std::span<const double> a, std::span<const double> b);
/// sum_i (a_i - ca) * b_i
double centered_dot(std::span<const double> a, double ca,
                    std::span<const double> b);
/// sum_i (a_i - ca) * (b_i - cb)
double centered_cross(std::span<const double> a, double ca,
                      std::span<const double> b, double cb);
/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

namespace scalar {
double sum(std::span<const double> x);
double dot(std::span<const double> a, std::span<const double> b);
double centered_dot(std::span<const double> a, double ca,
                    std::span<const double> b);
double centered_cross(std::span<const double> a, double ca,
                      std::span<const double> b, double cb);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
}  // namespace scalar

namespace avx2 {
double sum(std::span<const double> x);
double dot(std::span<const double> a, std::span<const double> b);
double centered_dot(std::span<const double> a, double ca,
                    std::span<const double> b);
double centered_cross(std::span<const double> a, double ca,
                      std::span<const double> b, double cb);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
}  // namespace avx2

}  // namespace lrsens::kernels
