// chem.hpp — umbrella header for the molecular electronic-structure stack.

#pragma once

#include "dqpe/chem/geometry.hpp"
#include "dqpe/chem/integrals.hpp"
#include "dqpe/chem/scf.hpp"
#include "dqpe/chem/second_quantized.hpp"
#include "dqpe/chem/jordan_wigner.hpp"
#include "dqpe/chem/fcidump.hpp"
#include "dqpe/chem/molecular_system.hpp"
