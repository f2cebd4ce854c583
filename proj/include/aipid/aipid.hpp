#pragma once

#include <aipid/errors.hpp>
#include <aipid/gencoords.hpp>
#include <aipid/noise.hpp>
#include <aipid/genmodel.hpp>
#include <aipid/controller.hpp>
#include <aipid/pid.hpp>
#include <aipid/plant.hpp>
#include <aipid/simloop.hpp>
#include <aipid/metrics.hpp>
#include <aipid/config.hpp>
#include <aipid/sweep.hpp>
#include <aipid/io.hpp>
#include <aipid/cli.hpp>
