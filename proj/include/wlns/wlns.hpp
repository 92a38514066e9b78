#pragma once

#include "wlns/config.hpp"
#include "wlns/counterexample.hpp"
#include "wlns/criteria.hpp"
#include "wlns/csv.hpp"
#include "wlns/cutoff.hpp"
#include "wlns/degiorgi.hpp"
#include "wlns/error.hpp"
#include "wlns/exponents.hpp"
#include "wlns/field.hpp"
#include "wlns/gronwall.hpp"
#include "wlns/lorentz.hpp"
#include "wlns/nse.hpp"
#include "wlns/snapshot.hpp"
