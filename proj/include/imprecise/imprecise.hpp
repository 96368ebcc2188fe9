#pragma once

#include "imprecise/core.hpp"
#include "imprecise/ambiguity.hpp"
#include "imprecise/partitions.hpp"
#include "imprecise/entropy.hpp"
#include "imprecise/sortrec.hpp"
#include "imprecise/quadrec.hpp"
#include "imprecise/generators.hpp"
#include "imprecise/json_io.hpp"
#include "imprecise/bench.hpp"
