#pragma once

#include "qgeom/core.hpp"
#include "qgeom/quadrature.hpp"
#include "qgeom/diffops.hpp"
#include "qgeom/geometry.hpp"
#include "qgeom/models.hpp"
#include "qgeom/fidelity.hpp"
#include "qgeom/spectrum.hpp"
