#pragma once
#include <gmpxx.h>
#include <string>
#include <optional>

namespace irw {

using Rat = mpq_class;

// Parse "3", "-7/2", "0.125", "1e3" into an exact rational.
std::optional<Rat> parse_rat(const std::string& s);

// Render without spaces, e.g. "-7/2", "3".
std::string rat_str(const Rat& q);

// Nearest rational to x with denominator <= max_den (continued fractions).
Rat rationalize(double x, unsigned long max_den);

}  // namespace irw
