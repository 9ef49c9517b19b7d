#ifndef RCMLE_TYPES_HPP
#define RCMLE_TYPES_HPP

#include <stdexcept>
#include <string>
#include <vector>

namespace rcmle {

/// Raised for invalid user-supplied configuration (bad grid bounds,
/// malformed schema, out-of-range solver options). The message names
/// the offending field.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// One data point (y, x). When the model has an intercept, x carries an
/// explicit leading 1.
struct Observation {
    double y = 0.0;
    std::vector<double> x;
};

} // namespace rcmle

#endif
