#pragma once

#include "r0fde/delay_op.hpp"
#include "r0fde/errors.hpp"
#include "r0fde/linalg.hpp"
#include "r0fde/r0_engine.hpp"
#include "r0fde/semigroup.hpp"
#include "r0fde/spectral.hpp"
#include "r0fde/tick_model.hpp"
