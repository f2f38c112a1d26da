#pragma once

#include "tricluster/core.hpp"
#include "tricluster/hamiltonian.hpp"
#include "tricluster/io.hpp"
#include "tricluster/lanczos.hpp"
#include "tricluster/lattice.hpp"
#include "tricluster/mbqc.hpp"
#include "tricluster/peps.hpp"
#include "tricluster/subspace.hpp"
#include "tricluster/tensor.hpp"
#include "tricluster/verification.hpp"
