#pragma once

#include "foodweight/error.hpp"
#include "foodweight/random.hpp"
#include "foodweight/geometry.hpp"
#include "foodweight/imaging.hpp"
#include "foodweight/codec.hpp"
#include "foodweight/features.hpp"
#include "foodweight/nnet/layers.hpp"
#include "foodweight/nnet/model.hpp"
#include "foodweight/nnet/adam.hpp"
#include "foodweight/nnet/train.hpp"
#include "foodweight/nnet/gradcheck.hpp"
#include "foodweight/nnet/checkpoint.hpp"
#include "foodweight/detect_eval.hpp"
#include "foodweight/regress_eval.hpp"
#include "foodweight/dataset.hpp"
#include "foodweight/pipeline.hpp"
