#pragma once

#include "dp2/core.hpp"
#include "dp2/emden.hpp"
#include "dp2/io.hpp"
#include "dp2/pdesolver.hpp"
#include "dp2/profile.hpp"
#include "dp2/residual.hpp"
#include "dp2/riccati.hpp"
#include "dp2/selfsim.hpp"
#include "dp2/spectral.hpp"
