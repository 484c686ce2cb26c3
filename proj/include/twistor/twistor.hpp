#pragma once

#include "error.hpp"
#include "hyperkahler.hpp"
#include "charts.hpp"
#include "quadrature.hpp"
#include "fock.hpp"
#include "symbol.hpp"
#include "toeplitz.hpp"
#include "semiclassics.hpp"
#include "serialization.hpp"

namespace twistor {

inline constexpr const char* kVersion = "0.1.0";

} // namespace twistor
