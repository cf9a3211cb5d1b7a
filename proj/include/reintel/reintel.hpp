#pragma once

// Umbrella header for the reintel library.

#include "reintel/common.hpp"
#include "reintel/csv.hpp"
#include "reintel/dataset.hpp"
#include "reintel/encoders.hpp"
#include "reintel/eval.hpp"
#include "reintel/features.hpp"
#include "reintel/fusion.hpp"
#include "reintel/image.hpp"
#include "reintel/matrix_file.hpp"
#include "reintel/nn/autograd.hpp"
#include "reintel/nn/layers.hpp"
#include "reintel/pipeline.hpp"
#include "reintel/synthetic.hpp"
#include "reintel/text.hpp"
