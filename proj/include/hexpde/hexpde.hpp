#pragma once

#include "hexpde/amg.hpp"
#include "hexpde/assembly.hpp"
#include "hexpde/error_estimation.hpp"
#include "hexpde/io.hpp"
#include "hexpde/mesh.hpp"
#include "hexpde/parallel.hpp"
#include "hexpde/problems.hpp"
#include "hexpde/reference_elements.hpp"
#include "hexpde/solvers.hpp"
#include "hexpde/sparse.hpp"
