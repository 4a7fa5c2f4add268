#pragma once

#include "preq/dynamics.hpp"
#include "preq/ensemble.hpp"
#include "preq/errors.hpp"
#include "preq/instances.hpp"
#include "preq/json_io.hpp"
#include "preq/matrix.hpp"
#include "preq/moments.hpp"
#include "preq/operators.hpp"
#include "preq/parallel.hpp"
#include "preq/report.hpp"
#include "preq/rng.hpp"
#include "preq/scenario.hpp"
#include "preq/sde.hpp"
#include "preq/superop.hpp"
#include "preq/verify.hpp"
