#pragma once

#include "saaformer/attention.hpp"
#include "saaformer/commands.hpp"
#include "saaformer/common.hpp"
#include "saaformer/dataflow.hpp"
#include "saaformer/layers.hpp"
#include "saaformer/metrics.hpp"
#include "saaformer/model.hpp"
#include "saaformer/rng.hpp"
#include "saaformer/spectral.hpp"
#include "saaformer/tensor.hpp"
