#include <doctest.h>

TEST_SUITE("contrasts") {}
