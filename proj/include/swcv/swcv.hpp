#pragma once

#include "swcv/bench.hpp"
#include "swcv/estimators.hpp"
#include "swcv/gaussian_exact.hpp"
#include "swcv/harmonics.hpp"
#include "swcv/kernel.hpp"
#include "swcv/measures.hpp"
#include "swcv/sphere.hpp"
#include "swcv/wasserstein1d.hpp"
