#ifndef UAL_HPP
#define UAL_HPP

#include "ual/acquisition.hpp"
#include "ual/alloop.hpp"
#include "ual/analysis.hpp"
#include "ual/bpr.hpp"
#include "ual/config.hpp"
#include "ual/datasets.hpp"
#include "ual/emit.hpp"
#include "ual/error.hpp"
#include "ual/experiment.hpp"
#include "ual/gpr.hpp"
#include "ual/linalg.hpp"
#include "ual/model.hpp"
#include "ual/rng.hpp"
#include "ual/svg.hpp"
#include "ual/synthetic.hpp"

#endif  // UAL_HPP
