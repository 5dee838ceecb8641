#pragma once

// Umbrella header.
#include "mns/bitstream.hpp"
#include "mns/decoder.hpp"
#include "mns/encoder.hpp"
#include "mns/image.hpp"
#include "mns/metrics.hpp"
#include "mns/transform.hpp"
