#include <doctest.h>

TEST_SUITE("longitudinal") {}
