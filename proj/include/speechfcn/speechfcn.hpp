// Umbrella header.
#pragma once

#include "speechfcn/common.hpp"
#include "speechfcn/tensor.hpp"
#include "speechfcn/fft.hpp"
#include "speechfcn/wav.hpp"
#include "speechfcn/mfcc.hpp"
#include "speechfcn/featmap_io.hpp"
#include "speechfcn/ops.hpp"
#include "speechfcn/optimizer.hpp"
#include "speechfcn/weights_io.hpp"
#include "speechfcn/backbone.hpp"
#include "speechfcn/config_json.hpp"
#include "speechfcn/model.hpp"
#include "speechfcn/manifest.hpp"
#include "speechfcn/metrics.hpp"
#include "speechfcn/trainer.hpp"
#include "speechfcn/otsu.hpp"
#include "speechfcn/heatmap.hpp"
#include "speechfcn/synth.hpp"
