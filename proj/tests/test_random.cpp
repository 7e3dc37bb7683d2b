#include <gtest/gtest.h>

#include "heavysum/random.hpp"

using namespace heavysum;

TEST(Philox, KnownAnswer) {
    Philox rng(0, 0);
    EXPECT_EQ(rng(), 0xe169c58d6627e8d5ULL);
}
