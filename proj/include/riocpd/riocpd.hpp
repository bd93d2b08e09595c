#pragma once

// Correlation-aware online change point detection on the SPD manifold:
// sliding-window correlation matrices, Log-Euclidean / Log-Cholesky
// geometry, and a CUSUM test over geodesic detection scores.

#include "riocpd/correlation.hpp"
#include "riocpd/detector.hpp"
#include "riocpd/errors.hpp"
#include "riocpd/eval.hpp"
#include "riocpd/io.hpp"
#include "riocpd/manifold.hpp"
#include "riocpd/pipeline.hpp"
#include "riocpd/simulator.hpp"
#include "riocpd/spd.hpp"
