#pragma once

#include "senc/analysis.hpp"
#include "senc/attacks.hpp"
#include "senc/dprm.hpp"
#include "senc/error.hpp"
#include "senc/fsprng.hpp"
#include "senc/gates.hpp"
#include "senc/gaussian.hpp"
#include "senc/io.hpp"
#include "senc/model.hpp"
#include "senc/nn.hpp"
#include "senc/permission.hpp"
#include "senc/pss.hpp"
#include "senc/rng.hpp"
#include "senc/synth.hpp"
#include "senc/tensor.hpp"
