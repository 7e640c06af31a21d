#include "irw/poly.hpp"
