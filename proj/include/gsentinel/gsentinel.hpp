#pragma once

#include "gsentinel/cluster.hpp"
#include "gsentinel/detectors.hpp"
#include "gsentinel/error.hpp"
#include "gsentinel/eval.hpp"
#include "gsentinel/features.hpp"
#include "gsentinel/gcode.hpp"
#include "gsentinel/geometry.hpp"
#include "gsentinel/io.hpp"
#include "gsentinel/mutate.hpp"
#include "gsentinel/pca.hpp"
#include "gsentinel/pipeline.hpp"
#include "gsentinel/rng.hpp"
#include "gsentinel/robust.hpp"
#include "gsentinel/simulate.hpp"
#include "gsentinel/synth.hpp"
