#pragma once

#include "zollfrei/berger.hpp"
#include "zollfrei/chart_oracle.hpp"
#include "zollfrei/closure.hpp"
#include "zollfrei/conformal.hpp"
#include "zollfrei/fermat.hpp"
#include "zollfrei/io.hpp"
#include "zollfrei/magnetic.hpp"
#include "zollfrei/ode.hpp"
#include "zollfrei/quadrature.hpp"
#include "zollfrei/quaternion.hpp"
#include "zollfrei/rng.hpp"
#include "zollfrei/surface.hpp"
#include "zollfrei/trace.hpp"
#include "zollfrei/vec.hpp"
#include "zollfrei/verify.hpp"
