#pragma once

#include <array>
#include <cstddef>
#include <span>

namespace vmix::quad {

struct Point1D {
  double x;  // on the reference interval [0, 1]
  double w;  // weights sum to 1
};

namespace detail {

template <std::size_t N>
constexpr std::array<Point1D, N> from_symmetric(const std::array<double, N>& xi,
                                                const std::array<double, N>& wi) {
  std::array<Point1D, N> out{};
  for (std::size_t i = 0; i < N; ++i) out[i] = {0.5 * (1.0 + xi[i]), 0.5 * wi[i]};
  return out;
}

}  // namespace detail

// Gauss-Legendre rules mapped to [0, 1].
inline constexpr std::array<Point1D, 2> gauss2 = detail::from_symmetric<2>(
    {-0.57735026918962576451, 0.57735026918962576451}, {1.0, 1.0});

inline constexpr std::array<Point1D, 4> gauss4 = detail::from_symmetric<4>(
    {-0.86113631159405257522, -0.33998104358485626480, 0.33998104358485626480,
     0.86113631159405257522},
    {0.34785484513745385737, 0.65214515486254614263, 0.65214515486254614263,
     0.34785484513745385737});

inline constexpr std::array<Point1D, 8> gauss8 = detail::from_symmetric<8>(
    {-0.96028985649753623168, -0.79666647741362673959, -0.52553240991632898582,
     -0.18343464249564980494, 0.18343464249564980494, 0.52553240991632898582,
     0.79666647741362673959, 0.96028985649753623168},
    {0.10122853629037625915, 0.22238103445337447054, 0.31370664587788728734,
     0.36268378337836198297, 0.36268378337836198297, 0.31370664587788728734,
     0.22238103445337447054, 0.10122853629037625915});

/// Composite Gauss rule on [a, b] with `panels` equal panels.
template <typename F, std::size_t N = 8>
double composite(F&& f, double a, double b, std::size_t panels,
                 const std::array<Point1D, N>& rule = gauss8) {
  if (panels == 0 || b <= a) return 0.0;
  const double len = (b - a) / static_cast<double>(panels);
  double sum = 0.0;
  for (std::size_t k = 0; k < panels; ++k) {
    const double x0 = a + len * static_cast<double>(k);
    double panel = 0.0;
    for (const auto& q : rule) panel += q.w * f(x0 + q.x * len);
    sum += panel * len;
  }
  return sum;
}

/// Barycentric coordinates and weight of a triangle rule (weights sum to 1).
struct TriPoint {
  std::array<double, 3> bary;
  double w;
};

// Edge-midpoint rule, exact for quadratics.
inline constexpr std::array<TriPoint, 3> tri_midpoint = {{
    {{0.5, 0.5, 0.0}, 1.0 / 3.0},
    {{0.0, 0.5, 0.5}, 1.0 / 3.0},
    {{0.5, 0.0, 0.5}, 1.0 / 3.0},
}};

}  // namespace vmix::quad
