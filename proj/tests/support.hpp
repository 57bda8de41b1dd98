#pragma once

#include "callout/scenario.hpp"

namespace callout::testing {

using callout::tiny_scenario;

}  // namespace callout::testing
