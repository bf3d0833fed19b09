#pragma once

#include "prostar/errors.hpp"
#include "prostar/report.hpp"
#include "prostar/matrix.hpp"
#include "prostar/eigen.hpp"
#include "prostar/algebra.hpp"
#include "prostar/homomorphism.hpp"
#include "prostar/random.hpp"
#include "prostar/wedderburn.hpp"
#include "prostar/hilbert_module.hpp"
#include "prostar/group.hpp"
#include "prostar/cp_map.hpp"
#include "prostar/ksgns.hpp"
#include "prostar/crossed_product.hpp"
#include "prostar/tower.hpp"
