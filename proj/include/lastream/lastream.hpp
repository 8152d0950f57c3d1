#pragma once

#include "lastream/decay.hpp"
#include "lastream/ensemble.hpp"
#include "lastream/error.hpp"
#include "lastream/exact.hpp"
#include "lastream/hash.hpp"
#include "lastream/learned.hpp"
#include "lastream/math.hpp"
#include "lastream/oracle.hpp"
#include "lastream/serialize.hpp"
#include "lastream/sketches.hpp"
#include "lastream/smooth_histogram.hpp"
#include "lastream/stream.hpp"
#include "lastream/time_decay.hpp"
