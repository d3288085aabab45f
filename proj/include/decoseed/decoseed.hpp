// decoseed.hpp - Umbrella header

#pragma once

#include "decoseed/araki_zurek.hpp"
#include "decoseed/error.hpp"
#include "decoseed/fock.hpp"
#include "decoseed/oracle.hpp"
#include "decoseed/qcore.hpp"
#include "decoseed/random.hpp"
#include "decoseed/scattering.hpp"
#include "decoseed/spectral_density.hpp"
#include "decoseed/vanhove.hpp"
