#pragma once

#include "dqso/errors.hpp"
#include "dqso/rng.hpp"
#include "dqso/simplex.hpp"
#include "dqso/qso.hpp"
#include "dqso/dissipativity.hpp"
#include "dqso/structure.hpp"
#include "dqso/dynamics.hpp"
#include "dqso/generator.hpp"
#include "dqso/io.hpp"
#include "dqso/report.hpp"
#include "dqso/pipeline.hpp"
