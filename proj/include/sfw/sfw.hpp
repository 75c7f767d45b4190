#ifndef SFW_SFW_HPP
#define SFW_SFW_HPP

// Umbrella header for the library. The run manifest (sfw/manifest.hpp) is separate because it
// needs OpenSSL.

#include "sfw/basis.hpp"
#include "sfw/errors.hpp"
#include "sfw/estimation.hpp"
#include "sfw/filter_design.hpp"
#include "sfw/io.hpp"
#include "sfw/oracle.hpp"
#include "sfw/precondition.hpp"
#include "sfw/simulate.hpp"
#include "sfw/spectral_model.hpp"
#include "sfw/toeplitz.hpp"
#include "sfw/truncation_budget.hpp"
#include "sfw/verify.hpp"

#endif // SFW_SFW_HPP
