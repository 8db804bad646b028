#pragma once

#include "matrix_core.hpp"
#include "radar_scene.hpp"
#include "complexity.hpp"
#include "beamformers.hpp"
#include "evaluation.hpp"
#include "io.hpp"
