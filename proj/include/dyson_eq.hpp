#ifndef DYSON_EQ_HPP
#define DYSON_EQ_HPP

#include "dyson_eq/denoise.hpp"
#include "dyson_eq/dyson.hpp"
#include "dyson_eq/equalizer.hpp"
#include "dyson_eq/errors.hpp"
#include "dyson_eq/io.hpp"
#include "dyson_eq/linalg.hpp"
#include "dyson_eq/simulate.hpp"
#include "dyson_eq/spectrum.hpp"
#include "dyson_eq/version.hpp"

#endif  // DYSON_EQ_HPP
