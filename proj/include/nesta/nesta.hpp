#pragma once

#include "nesta/bit_matrix.hpp"
#include "nesta/costmodel.hpp"
#include "nesta/dataflow.hpp"
#include "nesta/engine.hpp"
#include "nesta/errors.hpp"
#include "nesta/hwc.hpp"
#include "nesta/netspec.hpp"
#include "nesta/oracle.hpp"
#include "nesta/ppgen.hpp"
#include "nesta/verify.hpp"
