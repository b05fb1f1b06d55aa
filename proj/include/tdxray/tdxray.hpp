#pragma once

#include "tdxray/core.hpp"
#include "tdxray/jet.hpp"
#include "tdxray/conformal.hpp"
#include "tdxray/geometry.hpp"
#include "tdxray/fields.hpp"
#include "tdxray/xray.hpp"
#include "tdxray/spectral.hpp"
#include "tdxray/reconstruct.hpp"
#include "tdxray/beams.hpp"
#include "tdxray/wavesim.hpp"
