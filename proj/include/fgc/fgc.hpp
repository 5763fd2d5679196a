#pragma once

#include "fgc/evaluation.hpp"
#include "fgc/fuzzy_growcut.hpp"
#include "fgc/growcut.hpp"
#include "fgc/image.hpp"
#include "fgc/image_io.hpp"
#include "fgc/mlp.hpp"
#include "fgc/phantom.hpp"
#include "fgc/pipeline.hpp"
#include "fgc/seed_annealing.hpp"
#include "fgc/serialize.hpp"
#include "fgc/version.hpp"
#include "fgc/zernike.hpp"
