#pragma once

#include "rng.hpp"
#include "estimators.hpp"
#include "confidence.hpp"
#include "distributions.hpp"
#include "envs.hpp"
#include "policies.hpp"
#include "theory.hpp"
#include "harness.hpp"
