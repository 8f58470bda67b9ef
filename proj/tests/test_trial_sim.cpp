#include <doctest.h>

TEST_SUITE("trial_sim") {}
