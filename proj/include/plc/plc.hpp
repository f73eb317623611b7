#pragma once

// Umbrella header for the cover engine.

#include "plc/exact_arith.hpp"
#include "plc/intervals.hpp"
#include "plc/search.hpp"
#include "plc/certificate.hpp"
#include "plc/cover.hpp"
#include "plc/verifier.hpp"
