#pragma once

#include "matrix.hpp"
#include "graph.hpp"
#include "eig_oracle.hpp"
#include "simnet.hpp"
#include "protocols.hpp"
#include "estimators.hpp"
#include "optimizer.hpp"
#include "bench.hpp"
