#pragma once

// Umbrella header for the TAE target-aware low-light enhancement engine.

#include "tae/ablate.hpp"
#include "tae/bbox.hpp"
#include "tae/checkpoint.hpp"
#include "tae/config.hpp"
#include "tae/conv.hpp"
#include "tae/dataset.hpp"
#include "tae/enhance.hpp"
#include "tae/gradcheck.hpp"
#include "tae/guidance.hpp"
#include "tae/image_io.hpp"
#include "tae/losses.hpp"
#include "tae/metrics.hpp"
#include "tae/model.hpp"
#include "tae/ope.hpp"
#include "tae/optim.hpp"
#include "tae/reports.hpp"
#include "tae/synth.hpp"
#include "tae/tensor.hpp"
#include "tae/tracker.hpp"
#include "tae/train.hpp"
