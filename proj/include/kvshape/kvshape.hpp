#ifndef KVSHAPE_KVSHAPE_HPP
#define KVSHAPE_KVSHAPE_HPP

#include "kvshape/core.hpp"
#include "kvshape/geometry.hpp"
#include "kvshape/potential.hpp"
#include "kvshape/transmission.hpp"
#include "kvshape/shape_calculus.hpp"
#include "kvshape/optimizer.hpp"
#include "kvshape/spectral.hpp"

#endif  // KVSHAPE_KVSHAPE_HPP
