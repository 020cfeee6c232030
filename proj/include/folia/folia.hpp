#pragma once

#include <folia/aux_algebra.hpp>
#include <folia/direct_integral.hpp>
#include <folia/errors.hpp>
#include <folia/experiment.hpp>
#include <folia/histories.hpp>
#include <folia/rng.hpp>
#include <folia/version.hpp>
#include <folia/zeno.hpp>
