#include <doctest.h>

TEST_SUITE("dose_models") {}
