#ifndef MCSBD_MCSBD_HPP_
#define MCSBD_MCSBD_HPP_

// Multi-channel sparse blind deconvolution: everything in one include.

#include "mcsbd/error.hpp"
#include "mcsbd/field.hpp"
#include "mcsbd/fft.hpp"
#include "mcsbd/circulant.hpp"
#include "mcsbd/rng.hpp"
#include "mcsbd/model.hpp"
#include "mcsbd/precond.hpp"
#include "mcsbd/losses.hpp"
#include "mcsbd/sphere.hpp"
#include "mcsbd/rounding.hpp"
#include "mcsbd/recover.hpp"
#include "mcsbd/solver2d.hpp"
#include "mcsbd/io.hpp"
#include "mcsbd/experiments.hpp"

#endif  // MCSBD_MCSBD_HPP_
