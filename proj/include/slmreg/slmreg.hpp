#pragma once

#include "slmreg/empirical.hpp"
#include "slmreg/error.hpp"
#include "slmreg/fft.hpp"
#include "slmreg/io.hpp"
#include "slmreg/kernel.hpp"
#include "slmreg/kernel_regression.hpp"
#include "slmreg/mc.hpp"
#include "slmreg/optimize.hpp"
#include "slmreg/parallel.hpp"
#include "slmreg/process.hpp"
#include "slmreg/rng.hpp"
#include "slmreg/rules.hpp"
#include "slmreg/spec_test.hpp"
#include "slmreg/whittle.hpp"
