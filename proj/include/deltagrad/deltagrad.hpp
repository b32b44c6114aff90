#ifndef DELTAGRAD_DELTAGRAD_HPP
#define DELTAGRAD_DELTAGRAD_HPP

#include "deltagrad/benchmark.hpp"
#include "deltagrad/dataio.hpp"
#include "deltagrad/engine.hpp"
#include "deltagrad/error.hpp"
#include "deltagrad/fingerprint.hpp"
#include "deltagrad/lbfgs.hpp"
#include "deltagrad/models.hpp"
#include "deltagrad/privacy.hpp"
#include "deltagrad/random.hpp"
#include "deltagrad/trainer.hpp"

#endif  // DELTAGRAD_DELTAGRAD_HPP
