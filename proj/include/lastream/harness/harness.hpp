#pragma once

#include "lastream/harness/config.hpp"
#include "lastream/harness/results.hpp"
#include "lastream/harness/sweeps.hpp"
