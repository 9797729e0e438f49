#pragma once

#include "ncdr/core.hpp"
#include "ncdr/mesh.hpp"
#include "ncdr/quadrature.hpp"
#include "ncdr/field.hpp"
#include "ncdr/fe_spaces.hpp"
#include "ncdr/dofmap.hpp"
#include "ncdr/interp_ops.hpp"
#include "ncdr/assembly.hpp"
#include "ncdr/sparse_direct.hpp"
#include "ncdr/solver.hpp"
#include "ncdr/manufactured.hpp"
#include "ncdr/errors.hpp"
#include "ncdr/verify.hpp"
#include "ncdr/study.hpp"
