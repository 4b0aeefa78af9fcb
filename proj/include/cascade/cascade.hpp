#ifndef CASCADE_CASCADE_HPP
#define CASCADE_CASCADE_HPP

#include "cascade/applications.hpp"
#include "cascade/chain.hpp"
#include "cascade/constants.hpp"
#include "cascade/errors.hpp"
#include "cascade/fields.hpp"
#include "cascade/metrology.hpp"
#include "cascade/solver.hpp"

#endif // CASCADE_CASCADE_HPP
