#include <doctest.h>

TEST_SUITE("interim") {}
