#ifndef WSCORE_WSCORE_HPP
#define WSCORE_WSCORE_HPP

#include "wscore/cl1.hpp"
#include "wscore/correlation.hpp"
#include "wscore/csv.hpp"
#include "wscore/dataset.hpp"
#include "wscore/error.hpp"
#include "wscore/gauss.hpp"
#include "wscore/margins.hpp"
#include "wscore/report.hpp"
#include "wscore/selection.hpp"
#include "wscore/simulate.hpp"
#include "wscore/weighted_scores.hpp"

#endif  // WSCORE_WSCORE_HPP
