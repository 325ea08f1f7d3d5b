#ifndef TIGRANET_TIGRANET_HPP
#define TIGRANET_TIGRANET_HPP

#include "tigranet/data.hpp"
#include "tigranet/graph.hpp"
#include "tigranet/layers.hpp"
#include "tigranet/network.hpp"
#include "tigranet/optim.hpp"
#include "tigranet/rng.hpp"
#include "tigranet/spectral.hpp"
#include "tigranet/spectral_oracle.hpp"

#endif  // TIGRANET_TIGRANET_HPP
