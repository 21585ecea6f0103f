#ifndef NORMSOL_NORMSOL_HPP
#define NORMSOL_NORMSOL_HPP

#include "normsol/config.hpp"
#include "normsol/energy.hpp"
#include "normsol/errors.hpp"
#include "normsol/grid.hpp"
#include "normsol/io.hpp"
#include "normsol/model.hpp"
#include "normsol/rearrange.hpp"
#include "normsol/report.hpp"
#include "normsol/snapshot.hpp"
#include "normsol/solver.hpp"
#include "normsol/verify.hpp"

#endif
