// Copyright the c2ec authors. Licensed under the terms of the Apache 2.0
// license. See LICENSE in the project root.
#pragma once

#include "c2ec/decoder.hpp"
#include "c2ec/distance.hpp"
#include "c2ec/edit_weights.hpp"
#include "c2ec/errors.hpp"
#include "c2ec/eval.hpp"
#include "c2ec/lm.hpp"
#include "c2ec/manifest.hpp"
#include "c2ec/ngram_lm.hpp"
#include "c2ec/remote_lm.hpp"
#include "c2ec/unicode.hpp"
