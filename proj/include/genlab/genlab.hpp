#pragma once

#include <genlab/etv_stats.hpp>
#include <genlab/experiment.hpp>
#include <genlab/ga_engine.hpp>
#include <genlab/genealogy.hpp>
#include <genlab/qexp_fit.hpp>
#include <genlab/record_io.hpp>
#include <genlab/rng.hpp>
#include <genlab/trend_fit.hpp>
#include <genlab/tsp_instance.hpp>
#include <genlab/version.hpp>
