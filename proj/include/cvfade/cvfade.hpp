// Umbrella header.

#pragma once

#include "cvfade/diversity.hpp"
#include "cvfade/experiment.hpp"
#include "cvfade/fading.hpp"
#include "cvfade/gaussian.hpp"
#include "cvfade/key_rates.hpp"
#include "cvfade/version.hpp"
