#pragma once

#include "cwpower/autograd/adamw.hpp"
#include "cwpower/autograd/ops.hpp"
#include "cwpower/autograd/tensor.hpp"
#include "cwpower/dataset.hpp"
#include "cwpower/errors.hpp"
#include "cwpower/evaluate.hpp"
#include "cwpower/io.hpp"
#include "cwpower/model.hpp"
#include "cwpower/report.hpp"
#include "cwpower/rng.hpp"
#include "cwpower/signal.hpp"
#include "cwpower/spectral.hpp"
#include "cwpower/trainer.hpp"
