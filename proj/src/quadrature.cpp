#include "nsfem/quadrature.hpp"

#include <stdexcept>
#include <string>

namespace nsfem {

namespace {

constexpr double kA1 = 0.44594849091596488631832925388305;
constexpr double kW1 = 0.22338158967801146569500700843312;
constexpr double kA2 = 0.091576213509770743459571463402202;
constexpr double kW2 = 0.10995174365532186763832632490021;

constexpr std::array<QuadraturePoint, 1> kOrder1{{{{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}, 1.0}}};

constexpr std::array<QuadraturePoint, 3> kOrder2{{
    {{2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0}, 1.0 / 3.0},
    {{1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0}, 1.0 / 3.0},
    {{1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0}, 1.0 / 3.0},
}};

constexpr std::array<QuadraturePoint, 6> kOrder3{{
    {{1.0 - 2.0 * kA1, kA1, kA1}, kW1},
    {{kA1, 1.0 - 2.0 * kA1, kA1}, kW1},
    {{kA1, kA1, 1.0 - 2.0 * kA1}, kW1},
    {{1.0 - 2.0 * kA2, kA2, kA2}, kW2},
    {{kA2, 1.0 - 2.0 * kA2, kA2}, kW2},
    {{kA2, kA2, 1.0 - 2.0 * kA2}, kW2},
}};

}  // namespace

std::span<const QuadraturePoint> triangle_rule(int order)
{
  switch (order) {
    case 1: return kOrder1;
    case 2: return kOrder2;
    case 3: return kOrder3;
    default: throw std::invalid_argument("quadrature order must be 1, 2 or 3, got " + std::to_string(order));
  }
}

}  // namespace nsfem
