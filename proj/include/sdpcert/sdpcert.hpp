#pragma once

#include "sdpcert/bm.hpp"
#include "sdpcert/certifier.hpp"
#include "sdpcert/errors.hpp"
#include "sdpcert/instances.hpp"
#include "sdpcert/io.hpp"
#include "sdpcert/linalg.hpp"
#include "sdpcert/mc.hpp"
#include "sdpcert/model.hpp"
#include "sdpcert/rng.hpp"
#include "sdpcert/solver.hpp"
