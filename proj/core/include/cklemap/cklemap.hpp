#pragma once

#include "cklemap/bench.hpp"
#include "cklemap/ckle.hpp"
#include "cklemap/error.hpp"
#include "cklemap/fvtpfa.hpp"
#include "cklemap/gpr.hpp"
#include "cklemap/inverse.hpp"
#include "cklemap/io.hpp"
#include "cklemap/mesh.hpp"
#include "cklemap/parallel.hpp"
#include "cklemap/sparse_cholesky.hpp"
#include "cklemap/synth.hpp"
#include "cklemap/trust_region.hpp"
#include "cklemap/types.hpp"
