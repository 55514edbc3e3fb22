#pragma once

#include "foodweight/dataset.hpp"
#include "foodweight/nnet/train.hpp"

// Shared by the golden generator and the tests that check against it.
namespace golden {

inline foodweight::FixtureSpec fixture_spec() {
  foodweight::FixtureSpec s;
  s.classes = 3;
  s.per_class = 4;
  s.image_width = 64;
  s.image_height = 64;
  s.noise = 1.5;
  s.seed = 7;
  return s;
}

inline foodweight::nnet::TrainConfig train_config() {
  foodweight::nnet::TrainConfig c;
  c.epochs = 3;
  c.batch_size = 4;
  c.seed = 7;
  return c;
}

}  // namespace golden
