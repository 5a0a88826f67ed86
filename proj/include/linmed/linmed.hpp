// linmed.hpp - umbrella header.
#pragma once

#include "linmed/config.hpp"
#include "linmed/csvio.hpp"
#include "linmed/design.hpp"
#include "linmed/envs.hpp"
#include "linmed/errors.hpp"
#include "linmed/gram.hpp"
#include "linmed/harness.hpp"
#include "linmed/ope.hpp"
#include "linmed/policies.hpp"
#include "linmed/rng.hpp"
