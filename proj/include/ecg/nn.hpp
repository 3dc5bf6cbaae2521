#pragma once

#include "ecg/nn/checkpoint.hpp"
#include "ecg/nn/gradcheck.hpp"
#include "ecg/nn/layers.hpp"
#include "ecg/nn/loss.hpp"
#include "ecg/nn/model.hpp"
#include "ecg/nn/optim.hpp"
#include "ecg/nn/tensor.hpp"
#include "ecg/nn/train.hpp"
