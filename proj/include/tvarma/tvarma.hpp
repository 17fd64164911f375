#pragma once

#include "tvarma/errors.hpp"
#include "tvarma/graph.hpp"
#include "tvarma/spectral.hpp"
#include "tvarma/arma.hpp"
#include "tvarma/joint_causal.hpp"
#include "tvarma/baselines.hpp"
#include "tvarma/simulate.hpp"
#include "tvarma/evaluation.hpp"
#include "tvarma/io.hpp"
