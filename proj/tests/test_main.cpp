#include <gtest/gtest.h>

#include "stroke/common.hpp"

int main(int argc, char** argv) {
  stroke::tune_allocator();
  ::testing::InitGoogleTest(&argc, argv);
  return RUN_ALL_TESTS();
}
