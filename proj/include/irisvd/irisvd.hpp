#pragma once

#include "irisvd/config.hpp"
#include "irisvd/ebp.hpp"
#include "irisvd/error.hpp"
#include "irisvd/harness.hpp"
#include "irisvd/image.hpp"
#include "irisvd/iris_boundary.hpp"
#include "irisvd/iris_template.hpp"
#include "irisvd/matrix.hpp"
#include "irisvd/rng.hpp"
#include "irisvd/segmentation.hpp"
#include "irisvd/svd.hpp"
#include "irisvd/synth.hpp"
