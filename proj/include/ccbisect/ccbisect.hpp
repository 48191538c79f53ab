#pragma once

/// @file ccbisect.hpp
/// @brief Umbrella header.

#include "ccbisect/cli.hpp"
#include "ccbisect/instances.hpp"
#include "ccbisect/io.hpp"
#include "ccbisect/oracle.hpp"
#include "ccbisect/solve.hpp"
#include "ccbisect/svg.hpp"
