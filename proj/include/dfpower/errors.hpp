#pragma once

#include <stdexcept>
#include <string>

namespace dfpower {

// Base for all numerical/statistical failures. CLI maps these to exit code 3.
struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct not_positive_definite : numeric_error {
    using numeric_error::numeric_error;
};

struct dimension_mismatch : numeric_error {
    using numeric_error::numeric_error;
};

struct dimension_too_large : numeric_error {
    using numeric_error::numeric_error;
};

// Candidate mean vector is constant: no contrast separates the arms.
struct flat_shape : numeric_error {
    using numeric_error::numeric_error;
};

struct degenerate_contrast : numeric_error {
    using numeric_error::numeric_error;
};

// Interim covariance claims at least as much information as the final one.
struct no_information_remaining : numeric_error {
    using numeric_error::numeric_error;
};

struct singular_design : numeric_error {
    using numeric_error::numeric_error;
};

struct frac_unreachable : numeric_error {
    using numeric_error::numeric_error;
};

struct unachievable_sample_size : numeric_error {
    using numeric_error::numeric_error;
};

// Configuration problems. CLI maps these to exit code 2.
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace dfpower
