#pragma once

#include "radvae/rng.hpp"
#include "radvae/linalg.hpp"
#include "radvae/scenario.hpp"
#include "radvae/estimators.hpp"
#include "radvae/detectors.hpp"
#include "radvae/vae/layers.hpp"
#include "radvae/vae/model.hpp"
#include "radvae/vae/train.hpp"
#include "radvae/vae/weights_io.hpp"
#include "radvae/vae/gradcheck.hpp"
#include "radvae/parallel.hpp"
#include "radvae/bench.hpp"
#include "radvae/calibration.hpp"
#include "radvae/experiment.hpp"
#include "radvae/plot.hpp"
#include "radvae/config.hpp"
#include "radvae/pipeline.hpp"

namespace radvae {
inline constexpr const char* kVersion = "0.1.0";
}
